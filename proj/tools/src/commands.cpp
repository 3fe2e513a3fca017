#include "pairgrpo_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pairgrpo/analysis.hpp"
#include "pairgrpo/csv_io.hpp"
#include "pairgrpo/errors.hpp"
#include "pairgrpo/trainer.hpp"
#include "pairgrpo/version.hpp"
#include "pairgrpo_cli/parallel.hpp"
#include "pairgrpo_cli/suites.hpp"

namespace fs = std::filesystem;

namespace pairgrpo::cli {
namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("--out", "cannot create directory '" + dir + "'");
  }
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

void begin(const std::string& command, const RunConfig& config, const std::string& out_dir,
           std::vector<std::string> artifacts,
           std::vector<std::pair<std::string, std::string>> options = {}) {
  prepare_dir(out_dir);
  RunManifest manifest{command, config, std::move(artifacts), kVersion, std::move(options)};
  write_manifest(join(out_dir, "manifest.txt"), manifest);
}

std::vector<StepConfig> ablation_grid(const RunConfig& config) {
  std::vector<StepConfig> grid = {{0.01, 0.99}, {0.02, 0.98}, {0.05, 0.95}};
  for (const auto& extra : config.ablate_extra) {
    if (std::find(grid.begin(), grid.end(), extra) == grid.end()) grid.push_back(extra);
  }
  return grid;
}

double final_return(const TrainResult& r) {
  return r.records.empty() ? r.initial_return : r.records.back().expected_return;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config;
  if (!options.config_path.empty()) apply_config_file(config, options.config_path);
  apply_env_overrides(config);
  if (options.method) set_config_value(config, "train.method", *options.method);
  if (options.seed) config.train.seed = *options.seed;
  if (options.epochs) config.train.epochs = *options.epochs;
  if (options.jobs) config.jobs = *options.jobs;
  if (options.fixed_delta) config.train.fixed_delta = true;
  if (options.literal_clip) config.train.hp.clip_mode = ClipMode::kLiteralProduct;
  config.validate();
  return config;
}

int run_verify(const RunConfig& config, const std::string& suite, const std::string& out_dir,
               std::ostream& out, std::ostream& err) {
  std::vector<std::string> names;
  if (suite == "all") {
    names = default_suites();
  } else if (suite == "everything") {
    names = known_suites();
  } else {
    std::stringstream ss(suite);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (std::find(known_suites().begin(), known_suites().end(), name) == known_suites().end()) {
        throw ConfigError("--suite", "unknown suite '" + name + "'");
      }
      names.push_back(name);
    }
  }
  begin("verify", config, out_dir, {"verify.csv"}, {{"suite", suite}});

  std::ostringstream csv;
  csv << "suite,passed,detail\n";
  bool all_passed = true;
  for (const auto& name : names) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    try {
      r = run_suite(name, config);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      r = {name, false, std::string("error: ") + e.what() + "\n"};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all_passed = all_passed && r.passed;
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " (" << g6(secs) << " s)\n";
    std::istringstream lines(r.detail);
    for (std::string line; std::getline(lines, line);) out << "       " << line << "\n";
    std::string detail = r.detail;
    while (!detail.empty() && detail.back() == '\n') detail.pop_back();
    csv << r.name << ',' << (r.passed ? "true" : "false") << ',' << csv_field(detail) << '\n';
  }
  write_file(join(out_dir, "verify.csv"), csv.str());
  if (!all_passed) err << "verify: one or more suites failed\n";
  return all_passed ? kOk : kSuiteFailure;
}

int run_train(const RunConfig& config, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  begin("train", config, out_dir, {"epochs.csv", "final_policy.csv"});
  const int every = config.checkpoint_every;
  TrainResult result = train(config.train, [&](const EpochRecord& r, const Trainer& trainer) {
    if (every > 0 && r.epoch % every == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "checkpoint_%05d.csv", r.epoch);
      save_checkpoint(join(out_dir, name), trainer.policy());
    }
  });
  {
    std::ofstream csv(join(out_dir, "epochs.csv"), std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write epochs.csv");
    write_epochs_csv(csv, result.records, config.record_wall_time);
  }
  save_checkpoint(join(out_dir, "final_policy.csv"), result.final_policy);
  if (result.failed_epoch) {
    err << "train: numerical failure at epoch " << *result.failed_epoch << ": " << result.failure
        << "\n";
    return kNumericalFailure;
  }
  out << to_string(config.train.method) << ": " << result.records.size() << " epochs, J "
      << g6(result.initial_return) << " -> " << g6(final_return(result)) << "\n";
  return kOk;
}

int run_compare(const RunConfig& config, const std::string& out_dir, std::ostream& out,
                std::ostream& err) {
  begin("compare", config, out_dir, {"compare.csv", "stability.csv"});
  const Method methods[] = {Method::kGrpo, Method::kSoftPair, Method::kHardPair};
  const auto seeds = static_cast<std::size_t>(config.compare_seeds);
  std::vector<CompareRun> runs(seeds * 3);
  std::vector<std::string> failures(runs.size());
  parallel_for(runs.size(), config.jobs, [&](std::size_t i) {
    TrainConfig tc = config.train;
    tc.method = methods[i % 3];
    tc.seed = config.train.seed + i / 3;
    TrainResult r = train(tc);
    if (r.failed_epoch) {
      failures[i] = std::string(to_string(tc.method)) + " seed " + std::to_string(tc.seed) +
                    " failed at epoch " + std::to_string(*r.failed_epoch) + ": " + r.failure;
    }
    CompareRun& run = runs[i];
    run.seed = tc.seed;
    run.method = tc.method;
    run.initial_return = r.initial_return;
    if (r.records.size() >= 2) run.stability = stability_metrics(r.records);
    run.records = std::move(r.records);
  });
  for (const auto& f : failures) {
    if (!f.empty()) {
      err << "compare: " << f << "\n";
      return kNumericalFailure;
    }
  }
  {
    std::ofstream csv(join(out_dir, "compare.csv"), std::ios::binary);
    write_compare_csv(csv, runs);
    std::ofstream st(join(out_dir, "stability.csv"), std::ios::binary);
    write_stability_csv(st, runs);
  }
  double med_j[3], med_gv[3];
  for (int m = 0; m < 3; ++m) {
    std::vector<double> j, gv;
    for (std::size_t i = static_cast<std::size_t>(m); i < runs.size(); i += 3) {
      j.push_back(runs[i].records.empty() ? runs[i].initial_return
                                          : runs[i].records.back().expected_return);
      gv.push_back(runs[i].stability.grad_norm_variance);
    }
    med_j[m] = median(j);
    med_gv[m] = median(gv);
    out << to_string(methods[m]) << ": median final J " << g6(med_j[m])
        << ", median grad_norm_variance " << g6(med_gv[m]) << "\n";
  }
  const bool j_order = med_j[0] <= med_j[1] && med_j[1] <= med_j[2];
  const bool gv_order = med_gv[2] < med_gv[1] && med_gv[1] < med_gv[0];
  out << "final J grpo <= soft_pair <= hard_pair: " << (j_order ? "holds" : "violated") << "\n";
  out << "grad_norm_variance hard_pair < soft_pair < grpo: " << (gv_order ? "holds" : "violated")
      << "\n";
  return kOk;
}

int run_ablate(const RunConfig& config, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  begin("ablate", config, out_dir, {"ablate.csv"});
  struct Variant {
    std::string label;
    StepConfig step;
    bool fixed;
  };
  std::vector<Variant> variants;
  for (const auto& s : ablation_grid(config)) {
    variants.push_back({format_double(s.delta0) + "/" + format_double(s.gamma_decay), s, false});
  }
  const StepConfig base{config.train.hp.delta0, config.train.hp.gamma_decay};
  variants.push_back({"fixed " + format_double(base.delta0), base, true});

  const auto seeds = static_cast<std::size_t>(config.ablate_seeds);
  std::vector<double> final_j(variants.size() * seeds);
  std::vector<double> osc(final_j.size());
  std::vector<std::string> failures(final_j.size());
  parallel_for(final_j.size(), config.jobs, [&](std::size_t i) {
    const Variant& v = variants[i / seeds];
    TrainConfig tc = config.train;
    tc.method = Method::kHardPair;
    tc.hp.delta0 = v.step.delta0;
    tc.hp.gamma_decay = v.step.gamma_decay;
    tc.fixed_delta = v.fixed;
    tc.seed = config.train.seed + i % seeds;
    const TrainResult r = train(tc);
    if (r.failed_epoch) {
      failures[i] = v.label + " seed " + std::to_string(tc.seed) + " failed at epoch " +
                    std::to_string(*r.failed_epoch) + ": " + r.failure;
      return;
    }
    final_j[i] = final_return(r);
    osc[i] = r.records.size() >= 2 ? stability_metrics(r.records).oscillation : 0.0;
  });
  for (const auto& f : failures) {
    if (!f.empty()) {
      err << "ablate: " << f << "\n";
      return kNumericalFailure;
    }
  }
  std::vector<AblateRow> rows;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const auto first = static_cast<std::ptrdiff_t>(k * seeds);
    const auto last = first + static_cast<std::ptrdiff_t>(seeds);
    AblateRow row{variants[k].label,
                  variants[k].step.delta0,
                  variants[k].step.gamma_decay,
                  variants[k].fixed,
                  config.ablate_seeds,
                  median({final_j.begin() + first, final_j.begin() + last}),
                  median({osc.begin() + first, osc.begin() + last})};
    out << row.label << ": median final J " << g6(row.final_j_median) << ", median oscillation "
        << g6(row.oscillation_median) << "\n";
    rows.push_back(std::move(row));
  }
  {
    std::ofstream csv(join(out_dir, "ablate.csv"), std::ios::binary);
    write_ablate_csv(csv, rows);
  }
  auto find = [&](const StepConfig& s, bool fixed) -> const AblateRow* {
    for (const auto& r : rows) {
      if (r.delta0 == s.delta0 && r.gamma_decay == s.gamma_decay && r.fixed_delta == fixed) return &r;
    }
    return nullptr;
  };
  const AblateRow* fast = find({0.05, 0.95}, false);
  const AblateRow* slow = find({0.01, 0.99}, false);
  const AblateRow* fixed = find(base, true);
  const AblateRow* decayed = find(base, false);
  if (fast && slow) {
    out << "oscillation (0.05, 0.95) > (0.01, 0.99): "
        << (fast->oscillation_median > slow->oscillation_median ? "holds" : "violated") << "\n";
  }
  if (fixed && decayed) {
    out << "oscillation fixed >= decayed: "
        << (fixed->oscillation_median >= decayed->oscillation_median ? "holds" : "violated") << "\n";
  }
  return kOk;
}

int run_from_manifest(const std::string& manifest_path, const std::string& out_dir,
                      std::optional<int> jobs, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw ConfigError("manifest", "cannot read '" + manifest_path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunManifest manifest = parse_manifest(buffer.str());
  if (jobs) manifest.config.jobs = *jobs;
  manifest.config.validate();
  const std::string& cmd = manifest.command;
  if (cmd == "train") return run_train(manifest.config, out_dir, out, err);
  if (cmd == "compare") return run_compare(manifest.config, out_dir, out, err);
  if (cmd == "ablate") return run_ablate(manifest.config, out_dir, out, err);
  if (cmd == "verify") {
    std::string suite = "all";
    for (const auto& [key, value] : manifest.options) {
      if (key == "suite") suite = value;
    }
    return run_verify(manifest.config, suite, out_dir, out, err);
  }
  throw ConfigError("manifest", "unknown command '" + cmd + "'");
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure at epoch " << e.epoch() << ": " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSuiteFailure;
  }
}

}  // namespace pairgrpo::cli
