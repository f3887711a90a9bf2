#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tabnet/eval/metrics.hpp"

namespace tabnet::eval {

struct TableRow {
  std::string group;  // sub-heading, e.g. "lambda1" in the lambda sweep
  std::string label;
  SplitScores scores;
  std::optional<double> reference_avg;  // published average Dice for this setting
};

struct Table {
  std::string title;
  std::vector<TableRow> rows;
};

/// Aligned text with "mean±std" cells, grouped rows and a reference column.
std::string format_table(const Table& table);

/// One line per row: group,label,LV_mean,LV_std,Myo_mean,Myo_std,RV_mean,RV_std,Avg,reference_avg.
void write_table_csv(std::ostream& out, const Table& table);

/// Published rows for the full method, keyed by dataset name.
struct ReferenceRow {
  const char* dataset;
  double lv, lv_std, myo, myo_std, rv, rv_std, avg;
};
const std::vector<ReferenceRow>& reference_rows();

}  // namespace tabnet::eval
