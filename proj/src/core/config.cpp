#include "tabnet/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "tabnet/error.hpp"

namespace tabnet {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError("config key '" + std::string(key) + "': not a number: '" + t + "'");
  return v;
}

long long parse_int(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("config key '" + std::string(key) + "': not an integer: '" + t + "'");
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Interval parse_interval(std::string_view key, std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos)
    throw ConfigError("config key '" + std::string(key) + "': expected 'lo,hi'");
  Interval iv{parse_double(key, text.substr(0, comma)), parse_double(key, text.substr(comma + 1))};
  if (iv.lo > iv.hi) throw ConfigError("config key '" + std::string(key) + "': lo > hi");
  return iv;
}

struct KeySpec {
  const char* section;
  const char* name;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define TABNET_DOUBLE(sec, field)                                                      \
  KeySpec {                                                                            \
    sec, #field, [](TrainConfig& c, std::string_view v) { c.field = parse_double(#field, v); }, \
        [](const TrainConfig& c) { return fmt_double(c.field); }                       \
  }
#define TABNET_INT(sec, field)                                                              \
  KeySpec {                                                                                 \
    sec, #field,                                                                            \
        [](TrainConfig& c, std::string_view v) {                                            \
          c.field = static_cast<decltype(c.field)>(parse_int(#field, v));                   \
        },                                                                                  \
        [](const TrainConfig& c) { return std::to_string(c.field); }                        \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      TABNET_DOUBLE("loss", lambda1),
      TABNET_DOUBLE("loss", lambda2),
      TABNET_DOUBLE("loss", lambda3),
      TABNET_DOUBLE("loss", epsilon),
      {"loss", "ce_reduction",
       [](TrainConfig& c, std::string_view v) {
         const std::string t = trim(v);
         if (t == "mean") c.ce_reduction = CeReduction::kMean;
         else if (t == "sum") c.ce_reduction = CeReduction::kSum;
         else throw ConfigError("config key 'ce_reduction': expected mean|sum, got '" + t + "'");
       },
       [](const TrainConfig& c) {
         return std::string(c.ce_reduction == CeReduction::kMean ? "mean" : "sum");
       }},
      {"loss", "boundary_reduction",
       [](TrainConfig& c, std::string_view v) {
         const std::string t = trim(v);
         if (t == "joint") c.boundary_reduction = BoundaryReduction::kJoint;
         else if (t == "per_class") c.boundary_reduction = BoundaryReduction::kPerClass;
         else
           throw ConfigError("config key 'boundary_reduction': expected joint|per_class, got '" +
                             t + "'");
       },
       [](const TrainConfig& c) {
         return std::string(c.boundary_reduction == BoundaryReduction::kJoint ? "joint"
                                                                              : "per_class");
       }},
      TABNET_DOUBLE("optim", learning_rate),
      TABNET_DOUBLE("optim", lr_decay),
      TABNET_INT("optim", epochs),
      TABNET_INT("optim", batch_size),
      TABNET_INT("augment", jigsaw_grid),
      TABNET_INT("augment", cutout_margin),
      TABNET_DOUBLE("augment", cutout_fill),
      {"augment", "intensity_alpha_range",
       [](TrainConfig& c, std::string_view v) {
         c.intensity_alpha_range = parse_interval("intensity_alpha_range", v);
       },
       [](const TrainConfig& c) {
         return fmt_double(c.intensity_alpha_range.lo) + "," + fmt_double(c.intensity_alpha_range.hi);
       }},
      {"augment", "intensity_beta_range",
       [](TrainConfig& c, std::string_view v) {
         c.intensity_beta_range = parse_interval("intensity_beta_range", v);
       },
       [](const TrainConfig& c) {
         return fmt_double(c.intensity_beta_range.lo) + "," + fmt_double(c.intensity_beta_range.hi);
       }},
      {"augment", "tas_branches",
       [](TrainConfig& c, std::string_view v) { c.tas_branches = BranchSet::parse(v); },
       [](const TrainConfig& c) { return c.tas_branches.str(); }},
      {"bap", "pl_branches",
       [](TrainConfig& c, std::string_view v) { c.pl_branches = BranchSet::parse(v); },
       [](const TrainConfig& c) { return c.pl_branches.str(); }},
      {"bap", "pl_fusion",
       [](TrainConfig& c, std::string_view v) {
         const std::string t = trim(v);
         if (t == "loss_weighted") c.pl_fusion = FusionStrategy::kLossWeighted;
         else if (t == "average") c.pl_fusion = FusionStrategy::kAverage;
         else if (t == "random") c.pl_fusion = FusionStrategy::kRandom;
         else
           throw ConfigError(
               "config key 'pl_fusion': expected loss_weighted|average|random, got '" + t + "'");
       },
       [](const TrainConfig& c) { return to_string(c.pl_fusion); }},
      TABNET_INT("bap", boundary_pool_size),
      TABNET_INT("model", num_classes),
      TABNET_INT("model", ignore_label),
      TABNET_INT("model", base_width),
      TABNET_INT("model", depth),
      TABNET_INT("data", image_size),
      {"data", "data_root", [](TrainConfig& c, std::string_view v) { c.data_root = trim(v); },
       [](const TrainConfig& c) { return c.data_root; }},
      {"run", "seed",
       [](TrainConfig& c, std::string_view v) {
         const long long s = parse_int("seed", v);
         if (s < 0) throw ConfigError("config key 'seed': must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      {"run", "output_dir", [](TrainConfig& c, std::string_view v) { c.output_dir = trim(v); },
       [](const TrainConfig& c) { return c.output_dir; }},
  };
  return table;
}

#undef TABNET_DOUBLE
#undef TABNET_INT

const KeySpec& find_key(std::string_view key) {
  std::string_view section;
  std::string_view name = key;
  if (const auto dot = key.find('.'); dot != std::string_view::npos) {
    section = key.substr(0, dot);
    name = key.substr(dot + 1);
  }
  for (const auto& spec : key_table()) {
    if (name == spec.name && (section.empty() || section == spec.section)) return spec;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

bool is_section(std::string_view name) {
  for (const auto& spec : key_table())
    if (name == spec.section) return true;
  return false;
}

}  // namespace

BranchSet BranchSet::parse(std::string_view text) {
  BranchSet set{false, false, false};
  std::string t = trim(text);
  if (t == "none" || t.empty()) return set;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "i" || item == "cutout") set.cutout = true;
    else if (item == "j" || item == "jigsaw") set.jigsaw = true;
    else if (item == "k" || item == "intensity") set.intensity = true;
    else throw ConfigError("unknown branch '" + item + "' (expected i, j or k)");
  }
  return set;
}

std::string BranchSet::str() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(cutout, "i");
  add(jigsaw, "j");
  add(intensity, "k");
  return out.empty() ? "none" : out;
}

std::string to_string(FusionStrategy f) {
  switch (f) {
    case FusionStrategy::kLossWeighted: return "loss_weighted";
    case FusionStrategy::kAverage: return "average";
    case FusionStrategy::kRandom: return "random";
  }
  return "?";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) fail("lambda values must be non-negative");
  if (!(epsilon > 0)) fail("epsilon must be positive");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) fail("lr_decay must lie in (0, 1]");
  if (epochs < 0) fail("epochs must be non-negative");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (jigsaw_grid < 1) fail("jigsaw_grid must be >= 1");
  if (cutout_margin < 0) fail("cutout_margin must be non-negative");
  if (boundary_pool_size < 1 || boundary_pool_size % 2 == 0)
    fail("boundary_pool_size must be odd and positive");
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (ignore_label >= 0 && ignore_label < num_classes)
    fail("ignore_label must lie outside [0, num_classes)");
  if (base_width < 1 || depth < 1) fail("base_width and depth must be positive");
  if (image_size < 1) fail("image_size must be positive");
  if (image_size % jigsaw_grid != 0) fail("image_size must be divisible by jigsaw_grid");
  if (image_size % (1 << depth) != 0) fail("image_size must be divisible by 2^depth");
}

double TrainConfig::lr_at_epoch(int epoch) const {
  return learning_rate * std::pow(lr_decay, epoch);
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : key_table()) out.emplace_back(spec.section, spec.name);
  return out;
}

void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
  find_key(trim(key)).set(cfg, value);
}

void apply_overrides(TrainConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + item + "' is not key=value");
    set_config_value(cfg, std::string_view(item).substr(0, eq),
                     std::string_view(item).substr(eq + 1));
  }
}

TrainConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  TrainConfig cfg;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (node.data().empty() && is_section(name)) continue;
      set_config_value(cfg, name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) {
      const auto& spec = find_key(key);
      if (name != spec.section)
        throw ConfigError("config key '" + key + "' belongs to section [" + spec.section +
                          "], found in [" + name + "]");
      spec.set(cfg, leaf.data());
    }
  }
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string dump_config(const TrainConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& spec : key_table()) {
    if (section != spec.section) {
      if (!section.empty()) out << '\n';
      section = spec.section;
      out << '[' << section << "]\n";
    }
    out << spec.name << " = " << spec.get(cfg) << '\n';
  }
  return out.str();
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump_config(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace tabnet
