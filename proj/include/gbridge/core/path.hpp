#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace gbridge {

/// Right-continuous piecewise-constant trajectory of a jump process with
/// integer-labelled states. states[k] holds on [jump_times[k-1], jump_times[k]).
class PiecewiseConstantPath {
 public:
  PiecewiseConstantPath(double horizon, std::int64_t initial_state);
  PiecewiseConstantPath(double horizon, std::vector<double> jump_times,
                        std::vector<std::int64_t> states);

  /// Append a jump at time s (strictly after the previous jump, s <= horizon).
  void push_jump(double s, std::int64_t new_state);

  double horizon() const noexcept { return horizon_; }
  const std::vector<double>& jump_times() const noexcept { return jump_times_; }
  const std::vector<std::int64_t>& states() const noexcept { return states_; }
  std::size_t jump_count() const noexcept { return jump_times_.size(); }
  std::int64_t initial_state() const noexcept { return states_.front(); }
  std::int64_t terminal_state() const noexcept { return states_.back(); }

  /// State at time t (right-continuous).
  std::int64_t state_at(double t) const;

  /// Number of constancy intervals: jump_count() + 1.
  std::size_t interval_count() const noexcept { return states_.size(); }
  double interval_start(std::size_t k) const noexcept { return k == 0 ? 0.0 : jump_times_[k - 1]; }
  double interval_end(std::size_t k) const noexcept {
    return k < jump_times_.size() ? jump_times_[k] : horizon_;
  }

 private:
  void check() const;

  double horizon_;
  std::vector<double> jump_times_;
  std::vector<std::int64_t> states_;
};

/// Trajectory on a time grid t_0 = 0 < ... < t_N = T, with the standardized
/// Gaussian innovations Z_i that generated it (dW_i = sqrt(dt_i) Z_i).
class GridPath {
 public:
  GridPath(std::vector<double> times, std::vector<Eigen::VectorXd> values,
           std::vector<Eigen::VectorXd> innovations);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<Eigen::VectorXd>& values() const noexcept { return values_; }
  const std::vector<Eigen::VectorXd>& innovations() const noexcept { return innovations_; }
  double horizon() const noexcept { return times_.back(); }
  std::size_t step_count() const noexcept { return times_.size() - 1; }
  const Eigen::VectorXd& terminal_value() const noexcept { return values_.back(); }

  /// Value at the grid node nearest to t.
  const Eigen::VectorXd& value_near(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> values_;
  std::vector<Eigen::VectorXd> innovations_;
};

using Path = std::variant<PiecewiseConstantPath, GridPath>;

/// A simulated guided path with its log likelihood-ratio weight.
struct WeightedPath {
  explicit WeightedPath(Path p) : path(std::move(p)) {}

  Path path;
  /// Accumulated log Psi, with the backend's kappa factor already folded in.
  double log_psi = 0.0;
  /// Path-independent additive constant of the log weight (e.g. log(2 pi a T)
  /// for the graph backend). Cancels in self-normalized estimates.
  double log_constant = 0.0;
  double sup_V = 0.0;
  bool endpoint_hit = false;
  bool valid = true;
  std::string invalid_reason;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  /// Total log weight used by estimators.
  double log_weight() const noexcept { return log_psi + log_constant; }

  void invalidate(std::string reason) {
    valid = false;
    invalid_reason = std::move(reason);
  }
};

}  // namespace gbridge
