#include "pairgrpo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "pairgrpo/errors.hpp"

namespace pairgrpo {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + text + "'");
}

std::vector<StepConfig> parse_steps(const std::string& key, const std::string& text) {
  std::vector<StepConfig> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(key, "expected delta0:gamma pairs, got '" + item + "'");
    }
    out.push_back({parse_double(key, item.substr(0, colon)),
                   parse_double(key, item.substr(colon + 1))});
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;

#define PAIRGRPO_REAL(KEY, EXPR)                                                  \
  f.push_back({KEY, [](RunConfig& c, const std::string& v) { EXPR = parse_double(KEY, v); }, \
               [](const RunConfig& c) { return format_double(EXPR); }})
#define PAIRGRPO_INT(KEY, TYPE, EXPR)                                             \
  f.push_back({KEY, [](RunConfig& c, const std::string& v) { EXPR = parse_int<TYPE>(KEY, v); }, \
               [](const RunConfig& c) { return std::to_string(EXPR); }})
#define PAIRGRPO_BOOL(KEY, EXPR)                                                  \
  f.push_back({KEY, [](RunConfig& c, const std::string& v) { EXPR = parse_bool(KEY, v); }, \
               [](const RunConfig& c) { return std::string(EXPR ? "true" : "false"); }})

    PAIRGRPO_INT("env.S", std::size_t, c.train.env.num_states);
    PAIRGRPO_INT("env.A", std::size_t, c.train.env.num_actions);
    PAIRGRPO_INT("env.seed", std::uint64_t, c.train.env.seed);
    PAIRGRPO_REAL("env.noise_std", c.train.env.noise_std);
    PAIRGRPO_REAL("env.reward_scale", c.train.env.reward_scale);
    PAIRGRPO_REAL("env.reward_offset", c.train.env.reward_offset);
    PAIRGRPO_REAL("env.label_temperature", c.train.env.label_temperature);

    PAIRGRPO_REAL("hp.eps_clip", c.train.hp.eps_clip);
    PAIRGRPO_REAL("hp.beta", c.train.hp.beta);
    PAIRGRPO_REAL("hp.alpha", c.train.hp.alpha);
    PAIRGRPO_REAL("hp.delta0", c.train.hp.delta0);
    PAIRGRPO_REAL("hp.gamma_decay", c.train.hp.gamma_decay);
    PAIRGRPO_REAL("hp.eta", c.train.hp.eta);
    PAIRGRPO_INT("hp.K", int, c.train.hp.group_size);
    PAIRGRPO_REAL("hp.p_min", c.train.hp.p_min);
    PAIRGRPO_REAL("hp.eps_sigma", c.train.hp.eps_sigma);
    f.push_back({"hp.clip_mode",
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "ratio") c.train.hp.clip_mode = ClipMode::kRatio;
                   else if (t == "literal_product") c.train.hp.clip_mode = ClipMode::kLiteralProduct;
                   else throw ConfigError("hp.clip_mode", "expected ratio or literal_product");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.train.hp.clip_mode == ClipMode::kRatio ? "ratio"
                                                                               : "literal_product");
                 }});

    f.push_back({"train.method",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.train.method = parse_method(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError("train.method", e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.train.method)); }});
    PAIRGRPO_INT("train.epochs", int, c.train.epochs);
    PAIRGRPO_INT("train.pairs_per_epoch", int, c.train.pairs_per_epoch);
    PAIRGRPO_INT("train.n_inner", int, c.train.n_inner);
    PAIRGRPO_INT("train.sync_every", int, c.train.sync_every);
    PAIRGRPO_INT("train.seed", std::uint64_t, c.train.seed);
    PAIRGRPO_BOOL("train.fixed_delta", c.train.fixed_delta);
    f.push_back({"train.hard_update",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.train.hard_update = parse_hard_update(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError("train.hard_update", e.what());
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.train.hard_update)); }});
    PAIRGRPO_INT("train.checkpoint_every", int, c.checkpoint_every);
    PAIRGRPO_BOOL("train.record_wall_time", c.record_wall_time);

    PAIRGRPO_INT("analysis.gradient_points", std::size_t, c.analysis.gradient_points);
    PAIRGRPO_INT("analysis.equivalence_pairs", std::size_t, c.analysis.equivalence_pairs);
    PAIRGRPO_INT("analysis.variance_samples", std::size_t, c.analysis.variance_samples);
    PAIRGRPO_INT("analysis.replicates", int, c.analysis.replicates);
    PAIRGRPO_INT("analysis.monotonic_runs", int, c.analysis.monotonic_runs);
    PAIRGRPO_INT("analysis.convergence_tail", int, c.analysis.convergence_tail);
    f.push_back({"analysis.sigma_scope",
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "per_group") c.analysis.sigma_scope = SigmaScope::kPerGroup;
                   else if (t == "batch") c.analysis.sigma_scope = SigmaScope::kBatch;
                   else throw ConfigError("analysis.sigma_scope", "expected per_group or batch");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.analysis.sigma_scope == SigmaScope::kPerGroup ? "per_group"
                                                                                      : "batch");
                 }});

    PAIRGRPO_INT("compare.seeds", int, c.compare_seeds);
    PAIRGRPO_INT("ablate.seeds", int, c.ablate_seeds);
    f.push_back({"ablate.extra",
                 [](RunConfig& c, const std::string& v) {
                   c.ablate_extra = parse_steps("ablate.extra", v);
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (const auto& s : c.ablate_extra) {
                     if (!out.empty()) out += ", ";
                     out += format_double(s.delta0) + ":" + format_double(s.gamma_decay);
                   }
                   return out;
                 }});
    PAIRGRPO_INT("run.jobs", int, c.jobs);

#undef PAIRGRPO_REAL
#undef PAIRGRPO_INT
#undef PAIRGRPO_BOOL
    return f;
  }();
  return table;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

void RunConfig::validate() const {
  train.validate();
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every", "must be >= 0");
  if (analysis.gradient_points < 1) throw ConfigError("analysis.gradient_points", "must be >= 1");
  if (analysis.equivalence_pairs < 1) throw ConfigError("analysis.equivalence_pairs", "must be >= 1");
  if (analysis.variance_samples < 2) throw ConfigError("analysis.variance_samples", "must be >= 2");
  if (analysis.replicates < 1) throw ConfigError("analysis.replicates", "must be >= 1");
  if (analysis.monotonic_runs < 1) throw ConfigError("analysis.monotonic_runs", "must be >= 1");
  if (analysis.convergence_tail < 1) throw ConfigError("analysis.convergence_tail", "must be >= 1");
  if (compare_seeds < 1) throw ConfigError("compare.seeds", "must be >= 1");
  if (ablate_seeds < 1) throw ConfigError("ablate.seeds", "must be >= 1");
  for (const auto& s : ablate_extra) {
    if (!(s.delta0 > 0.0 && s.delta0 < 1.0 && s.gamma_decay > 0.0 && s.gamma_decay < 1.0)) {
      throw ConfigError("ablate.extra", "delta0 and gamma must lie in (0, 1)");
    }
  }
  if (jobs < 1) throw ConfigError("run.jobs", "must be >= 1");
}

std::string env_var_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (char ch : key) {
    out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value) {
  for (const Field& field : fields()) {
    if (field.key == key) {
      field.set(config, value);
      return;
    }
  }
  throw ConfigError(key, "unknown configuration key");
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'section.key = value'");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(config, buffer.str());
}

void apply_env_overrides(RunConfig& config) {
  for (const Field& field : fields()) {
    if (const char* value = std::getenv(env_var_name(field.key).c_str())) {
      field.set(config, value);
    }
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& field : fields()) out.emplace_back(field.key, field.get(config));
  return out;
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_entries(config)) {
    out += key + " = " + value + "\n";
  }
  return out;
}

}  // namespace pairgrpo
