#include "gbridge/core/path.hpp"

#include <algorithm>
#include <cmath>

#include "gbridge/core/error.hpp"

namespace gbridge {

PiecewiseConstantPath::PiecewiseConstantPath(double horizon, std::int64_t initial_state)
    : horizon_(horizon), states_{initial_state} {
  check();
}

PiecewiseConstantPath::PiecewiseConstantPath(double horizon, std::vector<double> jump_times,
                                             std::vector<std::int64_t> states)
    : horizon_(horizon), jump_times_(std::move(jump_times)), states_(std::move(states)) {
  check();
}

void PiecewiseConstantPath::check() const {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw std::invalid_argument("path horizon must be positive and finite");
  if (states_.size() != jump_times_.size() + 1)
    throw DimensionError("path needs exactly one more state than jump times");
  double prev = 0.0;
  for (std::size_t k = 0; k < jump_times_.size(); ++k) {
    const double s = jump_times_[k];
    if (!(s >= 0.0 && s <= horizon_) || (k > 0 && !(s > prev)))
      throw std::invalid_argument("jump times must be strictly increasing within [0, T]");
    prev = s;
  }
}

void PiecewiseConstantPath::push_jump(double s, std::int64_t new_state) {
  if (!(s >= 0.0 && s <= horizon_) || (!jump_times_.empty() && !(s > jump_times_.back())))
    throw std::invalid_argument("jump time out of order");
  jump_times_.push_back(s);
  states_.push_back(new_state);
}

std::int64_t PiecewiseConstantPath::state_at(double t) const {
  const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  return states_[static_cast<std::size_t>(it - jump_times_.begin())];
}

GridPath::GridPath(std::vector<double> times, std::vector<Eigen::VectorXd> values,
                   std::vector<Eigen::VectorXd> innovations)
    : times_(std::move(times)), values_(std::move(values)), innovations_(std::move(innovations)) {
  if (times_.size() < 2) throw DimensionError("grid path needs at least two time points");
  if (values_.size() != times_.size()) throw DimensionError("one value per grid time required");
  if (innovations_.size() != times_.size() - 1)
    throw DimensionError("one innovation per grid step required");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("grid times must increase");
  for (const auto& z : innovations_)
    if (z.size() != innovations_.front().size())
      throw DimensionError("innovations must share the noise dimension");
}

const Eigen::VectorXd& GridPath::value_near(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  if (i == times_.size()) return values_.back();
  if (i > 0 && (t - times_[i - 1]) < (times_[i] - t)) --i;
  return values_[i];
}

}  // namespace gbridge
