#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pairgrpo {

/// Flat gradient over a tabular policy's logits, state-major (s * A + a).
class GradientVector {
 public:
  GradientVector() = default;
  explicit GradientVector(std::size_t size) : values_(size, 0.0) {}
  explicit GradientVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  GradientVector& operator+=(const GradientVector& other);
  GradientVector& operator-=(const GradientVector& other);
  GradientVector& operator*=(double scale);
  /// this += scale * other
  void axpy(double scale, const GradientVector& other);

  double dot(const GradientVector& other) const;
  double norm() const;
  bool all_finite() const;

 private:
  std::vector<double> values_;
};

GradientVector operator-(GradientVector lhs, const GradientVector& rhs);
GradientVector operator*(double scale, GradientVector v);

/// Probability vector over actions. Entries >= 0 and sum to 1 within 1e-12.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit Distribution(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_.at(i); }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Softmax policy with one logit row per state. Value type; copying a policy
/// is how a frozen reference is taken.
class TabularPolicy {
 public:
  /// Uniform policy (all logits zero).
  TabularPolicy(std::size_t num_states, std::size_t num_actions);
  TabularPolicy(std::size_t num_states, std::size_t num_actions,
                std::vector<double> logits);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t num_params() const noexcept { return logits_.size(); }

  double logit(std::size_t state, std::size_t action) const;
  std::span<const double> logits() const noexcept { return logits_; }
  std::span<const double> row(std::size_t state) const;

  std::size_t flat_index(std::size_t state, std::size_t action) const;

  /// Copy with one flat logit shifted by delta.
  TabularPolicy perturbed(std::size_t flat, double delta) const;
  /// theta <- theta - lr * gradient
  void descend(const GradientVector& gradient, double lr);

  bool same_shape(const TabularPolicy& other) const noexcept {
    return num_states_ == other.num_states_ &&
           num_actions_ == other.num_actions_;
  }

  friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

 private:
  void check_state(std::size_t state) const;

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> logits_;
};

Distribution action_probs(const TabularPolicy& policy, std::size_t state);

double log_prob(const TabularPolicy& policy, std::size_t state,
                std::size_t action);

/// pi(a|s) / pi_ref(a|s), evaluated in log space.
double prob_ratio(const TabularPolicy& policy, const TabularPolicy& reference,
                  std::size_t state, std::size_t action);

/// KL(p || q) in nats. Throws DivergenceError if q has a zero where p > 0.
double kl_divergence(const Distribution& p, const Distribution& q);

/// Mean over `states` of KL(policy(.|s) || reference(.|s)).
double policy_kl(const TabularPolicy& policy, const TabularPolicy& reference,
                 std::span<const std::size_t> states);

/// d log pi(action|state) / d theta: 1{a'=action} - pi(a'|state) inside the
/// state's block, zero elsewhere.
GradientVector log_prob_grad(const TabularPolicy& policy, std::size_t state,
                             std::size_t action);

/// Gradient of policy_kl(policy, reference, states) with respect to the
/// policy's logits.
GradientVector policy_kl_grad(const TabularPolicy& policy,
                              const TabularPolicy& reference,
                              std::span<const std::size_t> states);

using PolicyLoss = std::function<double(const TabularPolicy&)>;

/// Central finite differences, one coordinate at a time.
GradientVector finite_diff_grad(const PolicyLoss& loss,
                                const TabularPolicy& policy, double h = 1e-5);

/// Norm-wise relative error ||a - b|| / max(||a||, ||b||); 0 when both are
/// below `zero_floor`.
double relative_error(const GradientVector& a, const GradientVector& b,
                      double zero_floor = 1e-12);

/// Sorted distinct states of a batch.
std::vector<std::size_t> unique_states(std::span<const std::size_t> states);

}  // namespace pairgrpo
