#include "pairgrpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pairgrpo/errors.hpp"
#include "detail.hpp"

namespace pairgrpo {

// ---------------------------------------------------------------- GradientVector

GradientVector::GradientVector(std::vector<double> values)
    : values_(std::move(values)) {}

GradientVector& GradientVector::operator+=(const GradientVector& other) {
  axpy(1.0, other);
  return *this;
}

GradientVector& GradientVector::operator-=(const GradientVector& other) {
  axpy(-1.0, other);
  return *this;
}

GradientVector& GradientVector::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

void GradientVector::axpy(double scale, const GradientVector& other) {
  if (other.size() != size()) {
    throw std::invalid_argument("GradientVector: length mismatch");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += scale * other.values_[i];
  }
}

double GradientVector::dot(const GradientVector& other) const {
  if (other.size() != size()) {
    throw std::invalid_argument("GradientVector: length mismatch");
  }
  return std::inner_product(values_.begin(), values_.end(),
                            other.values_.begin(), 0.0);
}

double GradientVector::norm() const { return std::sqrt(dot(*this)); }

bool GradientVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

GradientVector operator-(GradientVector lhs, const GradientVector& rhs) {
  lhs -= rhs;
  return lhs;
}

GradientVector operator*(double scale, GradientVector v) {
  v *= scale;
  return v;
}

// ---------------------------------------------------------------- Distribution

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("Distribution: empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("Distribution: negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("Distribution: entries sum to " +
                                std::to_string(sum));
  }
}

// ---------------------------------------------------------------- TabularPolicy

TabularPolicy::TabularPolicy(std::size_t num_states, std::size_t num_actions)
    : TabularPolicy(num_states, num_actions,
                    std::vector<double>(num_states * num_actions, 0.0)) {}

TabularPolicy::TabularPolicy(std::size_t num_states, std::size_t num_actions,
                             std::vector<double> logits)
    : num_states_(num_states),
      num_actions_(num_actions),
      logits_(std::move(logits)) {
  if (num_states_ == 0) throw std::invalid_argument("TabularPolicy: S must be >= 1");
  if (num_actions_ < 2) throw std::invalid_argument("TabularPolicy: A must be >= 2");
  if (logits_.size() != num_states_ * num_actions_) {
    throw std::invalid_argument("TabularPolicy: expected S*A logits");
  }
  for (double v : logits_) {
    if (!std::isfinite(v)) throw std::invalid_argument("TabularPolicy: non-finite logit");
  }
}

void TabularPolicy::check_state(std::size_t state) const {
  if (state >= num_states_) {
    throw std::out_of_range("state " + std::to_string(state) +
                            " out of range [0, " + std::to_string(num_states_) +
                            ")");
  }
}

std::size_t TabularPolicy::flat_index(std::size_t state,
                                      std::size_t action) const {
  check_state(state);
  if (action >= num_actions_) {
    throw std::out_of_range("action " + std::to_string(action) +
                            " out of range [0, " + std::to_string(num_actions_) +
                            ")");
  }
  return state * num_actions_ + action;
}

double TabularPolicy::logit(std::size_t state, std::size_t action) const {
  return logits_[flat_index(state, action)];
}

std::span<const double> TabularPolicy::row(std::size_t state) const {
  check_state(state);
  return std::span<const double>(logits_).subspan(state * num_actions_,
                                                  num_actions_);
}

TabularPolicy TabularPolicy::perturbed(std::size_t flat, double delta) const {
  TabularPolicy copy = *this;
  copy.logits_.at(flat) += delta;
  return copy;
}

void TabularPolicy::descend(const GradientVector& gradient, double lr) {
  if (gradient.size() != logits_.size()) {
    throw std::invalid_argument("descend: gradient length mismatch");
  }
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    logits_[i] -= lr * gradient[i];
  }
}

// ---------------------------------------------------------------- operations

namespace detail {

std::vector<double> log_softmax(std::span<const double> row) {
  const double max = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - max);
  const double log_norm = max + std::log(sum);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] - log_norm;
  return out;
}

std::vector<double> softmax(std::span<const double> row) {
  const double max = *std::max_element(row.begin(), row.end());
  std::vector<double> out(row.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = std::exp(row[i] - max);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double row_kl(std::span<const double> policy_row,
              std::span<const double> reference_row) {
  const auto lp = log_softmax(policy_row);
  const auto lq = log_softmax(reference_row);
  double kl = 0.0;
  for (std::size_t a = 0; a < lp.size(); ++a) {
    kl += std::exp(lp[a]) * (lp[a] - lq[a]);
  }
  return std::max(kl, 0.0);
}

void require_same_shape(const TabularPolicy& a, const TabularPolicy& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("policy shapes differ: (" +
                                std::to_string(a.num_states()) + "," +
                                std::to_string(a.num_actions()) + ") vs (" +
                                std::to_string(b.num_states()) + "," +
                                std::to_string(b.num_actions()) + ")");
  }
}

}  // namespace detail

Distribution action_probs(const TabularPolicy& policy, std::size_t state) {
  return Distribution(detail::softmax(policy.row(state)));
}

double log_prob(const TabularPolicy& policy, std::size_t state,
                std::size_t action) {
  policy.flat_index(state, action);
  return detail::log_softmax(policy.row(state))[action];
}

double prob_ratio(const TabularPolicy& policy, const TabularPolicy& reference,
                  std::size_t state, std::size_t action) {
  detail::require_same_shape(policy, reference);
  return std::exp(log_prob(policy, state, action) -
                  log_prob(reference, state, action));
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: length mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    if (q[i] == 0.0) {
      throw DivergenceError("kl_divergence: q[" + std::to_string(i) +
                            "] = 0 where p > 0");
    }
    kl += pi * std::log(pi / q[i]);
  }
  return std::max(kl, 0.0);
}

double policy_kl(const TabularPolicy& policy, const TabularPolicy& reference,
                 std::span<const std::size_t> states) {
  detail::require_same_shape(policy, reference);
  if (states.empty()) throw std::invalid_argument("policy_kl: empty state set");
  double total = 0.0;
  for (std::size_t s : states) {
    total += detail::row_kl(policy.row(s), reference.row(s));
  }
  return total / static_cast<double>(states.size());
}

GradientVector log_prob_grad(const TabularPolicy& policy, std::size_t state,
                             std::size_t action) {
  const std::size_t base = policy.flat_index(state, 0);
  policy.flat_index(state, action);
  const auto probs = detail::softmax(policy.row(state));
  GradientVector grad(policy.num_params());
  for (std::size_t a = 0; a < probs.size(); ++a) {
    grad[base + a] = (a == action ? 1.0 : 0.0) - probs[a];
  }
  return grad;
}

GradientVector policy_kl_grad(const TabularPolicy& policy,
                              const TabularPolicy& reference,
                              std::span<const std::size_t> states) {
  detail::require_same_shape(policy, reference);
  if (states.empty()) throw std::invalid_argument("policy_kl_grad: empty state set");
  GradientVector grad(policy.num_params());
  const double weight = 1.0 / static_cast<double>(states.size());
  for (std::size_t s : states) {
    const auto lp = detail::log_softmax(policy.row(s));
    const auto lq = detail::log_softmax(reference.row(s));
    double kl = 0.0;
    for (std::size_t a = 0; a < lp.size(); ++a) kl += std::exp(lp[a]) * (lp[a] - lq[a]);
    const std::size_t base = policy.flat_index(s, 0);
    for (std::size_t a = 0; a < lp.size(); ++a) {
      // d KL / d theta_a = pi_a * (log pi_a - log q_a - KL)
      grad[base + a] += weight * std::exp(lp[a]) * (lp[a] - lq[a] - kl);
    }
  }
  return grad;
}

GradientVector finite_diff_grad(const PolicyLoss& loss,
                                const TabularPolicy& policy, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  GradientVector grad(policy.num_params());
  for (std::size_t i = 0; i < policy.num_params(); ++i) {
    const double plus = loss(policy.perturbed(i, h));
    const double minus = loss(policy.perturbed(i, -h));
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw EvaluationError("finite_diff_grad: non-finite loss at coordinate " +
                            std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double relative_error(const GradientVector& a, const GradientVector& b,
                      double zero_floor) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < zero_floor) return 0.0;
  return (a - b).norm() / scale;
}

std::vector<std::size_t> unique_states(std::span<const std::size_t> states) {
  std::vector<std::size_t> out(states.begin(), states.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace pairgrpo
