#include "tabnet/eval/table.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace tabnet::eval {
namespace {

std::string cell(const MeanStd& m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f±%.2f", m.mean, m.std);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  // "±" is two bytes but one column.
  std::size_t cols = 0;
  for (unsigned char ch : s) cols += (ch & 0xC0) != 0x80;
  return s + std::string(width > cols ? width - cols : 0, ' ');
}

}  // namespace

std::string format_table(const Table& table) {
  std::size_t label_w = 9;
  for (const auto& r : table.rows) label_w = std::max(label_w, r.label.size() + 2);
  std::ostringstream out;
  out << table.title << '\n';
  std::string header = pad("Setting", label_w);
  for (const auto& s : kStructures) header += pad(s.name, 12);
  header += pad("Avg", 8) + "Ref";
  out << header << '\n' << std::string(header.size() + 4, '-') << '\n';
  std::string group;
  for (const auto& r : table.rows) {
    if (r.group != group) {
      group = r.group;
      if (!group.empty()) out << "[" << group << "]\n";
    }
    out << pad(r.label, label_w);
    for (const auto& m : r.scores.structures) out << pad(cell(m), 12);
    out << pad(fixed(r.scores.average, 3), 8)
        << (r.reference_avg ? fixed(*r.reference_avg, 3) : std::string("-")) << '\n';
  }
  return out.str();
}

void write_table_csv(std::ostream& out, const Table& table) {
  out << "group,label";
  for (const auto& s : kStructures) out << ',' << s.name << "_mean," << s.name << "_std";
  out << ",Avg,reference_avg\n";
  for (const auto& r : table.rows) {
    out << r.group << ',' << r.label;
    for (const auto& m : r.scores.structures) out << ',' << fixed(m.mean, 6) << ',' << fixed(m.std, 6);
    out << ',' << fixed(r.scores.average, 6) << ','
        << (r.reference_avg ? fixed(*r.reference_avg, 3) : std::string()) << '\n';
  }
}

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows{
      {"MSCMRseg", 0.933, 0.03, 0.859, 0.03, 0.881, 0.05, 0.891},
      {"ACDC", 0.937, 0.04, 0.904, 0.02, 0.892, 0.05, 0.911},
  };
  return rows;
}

}  // namespace tabnet::eval
