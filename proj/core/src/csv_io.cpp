#include "pairgrpo/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pairgrpo/analysis.hpp"
#include "pairgrpo/errors.hpp"

namespace pairgrpo {
namespace {

std::string fmt(double v) { return format_double(v); }

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::size_t parse_index(const std::string& field, int line_no) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(field, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (field.empty() || pos != field.size() || field[0] == '-') {
    throw std::runtime_error("checkpoint line " + std::to_string(line_no) +
                             ": bad index '" + field + "'");
  }
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& field, int line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (field.empty() || pos != field.size()) {
    throw std::runtime_error("checkpoint line " + std::to_string(line_no) +
                             ": bad logit '" + field + "'");
  }
  return v;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

void write_checkpoint(std::ostream& out, const TabularPolicy& policy) {
  out << kCheckpointHeader << '\n';
  for (std::size_t s = 0; s < policy.num_states(); ++s) {
    for (std::size_t a = 0; a < policy.num_actions(); ++a) {
      out << s << ',' << a << ',' << fmt17(policy.logit(s, a)) << '\n';
    }
  }
}

TabularPolicy read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint: empty input");
  strip_cr(line);
  if (line != kCheckpointHeader) {
    throw std::runtime_error("checkpoint: expected header '" + std::string(kCheckpointHeader) + "'");
  }
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::size_t max_s = 0;
  std::size_t max_a = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::size_t s = parse_index(fields[0], line_no);
    const std::size_t a = parse_index(fields[1], line_no);
    if (!cells.emplace(std::make_pair(s, a), parse_real(fields[2], line_no)).second) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": duplicate cell");
    }
    max_s = std::max(max_s, s);
    max_a = std::max(max_a, a);
  }
  if (cells.empty()) throw std::runtime_error("checkpoint: no rows");
  const std::size_t S = max_s + 1;
  const std::size_t A = max_a + 1;
  if (cells.size() != S * A) {
    throw std::runtime_error("checkpoint: expected " + std::to_string(S * A) + " cells, found " +
                             std::to_string(cells.size()));
  }
  std::vector<double> logits;
  logits.reserve(S * A);
  for (const auto& [key, value] : cells) logits.push_back(value);
  return TabularPolicy(S, A, std::move(logits));
}

void save_checkpoint(const std::string& path, const TabularPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_checkpoint(out, policy);
}

TabularPolicy load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return read_checkpoint(in);
}

void write_epochs_csv(std::ostream& out, const std::vector<EpochRecord>& records,
                      bool with_wall_time) {
  out << kEpochsHeader << '\n';
  for (const auto& r : records) {
    out << r.epoch << ',' << fmt(r.loss_total) << ',' << fmt(r.loss_fit_or_surrogate) << ','
        << fmt(r.kl_term) << ',' << fmt(r.grad_norm) << ',' << fmt(r.policy_kl) << ','
        << (r.delta_t ? fmt(*r.delta_t) : "") << ',' << fmt(r.expected_return) << ','
        << (with_wall_time ? fmt(r.wall_ms) : "") << '\n';
  }
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRun>& runs) {
  out << kCompareHeader << '\n';
  for (const auto& run : runs) {
    const std::string prefix = std::to_string(run.seed) + ',' + std::string(to_string(run.method));
    out << prefix << ",0," << fmt(run.initial_return) << ",\n";
    for (const auto& r : run.records) {
      out << prefix << ',' << r.epoch << ',' << fmt(r.expected_return) << ','
          << fmt(r.loss_total) << '\n';
    }
  }
}

void write_stability_csv(std::ostream& out, const std::vector<CompareRun>& runs) {
  out << kStabilityHeader << '\n';
  std::map<Method, std::vector<const CompareRun*>> by_method;
  for (const auto& run : runs) {
    const double final_j = run.records.empty() ? run.initial_return : run.records.back().expected_return;
    out << run.seed << ',' << to_string(run.method) << ',' << fmt(final_j) << ','
        << fmt(run.stability.grad_norm_variance) << ',' << fmt(run.stability.kl_std) << ','
        << fmt(run.stability.oscillation) << '\n';
    by_method[run.method].push_back(&run);
  }
  for (const auto& [method, group] : by_method) {
    std::vector<double> j, gv, kl, osc;
    for (const CompareRun* run : group) {
      j.push_back(run->records.empty() ? run->initial_return : run->records.back().expected_return);
      gv.push_back(run->stability.grad_norm_variance);
      kl.push_back(run->stability.kl_std);
      osc.push_back(run->stability.oscillation);
    }
    out << "median," << to_string(method) << ',' << fmt(median(j)) << ',' << fmt(median(gv))
        << ',' << fmt(median(kl)) << ',' << fmt(median(osc)) << '\n';
  }
}

void write_ablate_csv(std::ostream& out, const std::vector<AblateRow>& rows) {
  out << kAblateHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.label) << ',' << fmt(r.delta0) << ',' << fmt(r.gamma_decay) << ','
        << (r.fixed_delta ? "true" : "false") << ',' << r.n_seeds << ','
        << fmt(r.final_j_median) << ',' << fmt(r.oscillation_median) << '\n';
  }
}

std::string to_text(const RunManifest& manifest) {
  std::ostringstream out;
  out << "# pairgrpo run manifest\n";
  out << "# command: " << manifest.command << '\n';
  out << "# tool_version: " << manifest.tool_version << '\n';
  for (const auto& [key, value] : manifest.options) {
    out << "# option: " << key << " = " << value << '\n';
  }
  for (const auto& path : manifest.artifacts) out << "# artifact: " << path << '\n';
  out << to_config_text(manifest.config);
  return out.str();
}

RunManifest parse_manifest(const std::string& text) {
  RunManifest manifest;
  std::istringstream in(text);
  std::string line;
  auto after = [](const std::string& l, const std::string& tag) -> std::optional<std::string> {
    if (l.rfind(tag, 0) != 0) return std::nullopt;
    return l.substr(tag.size());
  };
  while (std::getline(in, line)) {
    strip_cr(line);
    if (auto v = after(line, "# command: ")) {
      manifest.command = *v;
    } else if (auto v = after(line, "# tool_version: ")) {
      manifest.tool_version = *v;
    } else if (auto v = after(line, "# artifact: ")) {
      manifest.artifacts.push_back(*v);
    } else if (auto v = after(line, "# option: ")) {
      const auto eq = v->find(" = ");
      if (eq == std::string::npos) throw ConfigError("manifest", "malformed option line");
      manifest.options.emplace_back(v->substr(0, eq), v->substr(eq + 3));
    }
  }
  apply_config_text(manifest.config, text);
  return manifest;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_text(manifest);
}

}  // namespace pairgrpo
