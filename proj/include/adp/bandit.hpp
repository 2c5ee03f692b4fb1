#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "adp/errors.hpp"
#include "adp/random.hpp"

namespace adp {

struct BanditArm {
  double omega = 0.0;
  long long alpha = 1;
  long long beta = 1;
};

// Thompson-sampling bandit over trade-off coefficients with Beta posteriors.
// An arm's posterior moves only when the validation return is compared
// against a previous one.
struct BanditState {
  std::vector<BanditArm> arms{{0.2, 1, 1}, {0.8, 1, 1}};
  std::optional<double> last_validation_return;
};

struct BanditPull {
  std::size_t arm = 0;
  double omega = 0.0;
};

inline BanditPull bandit_sample(const BanditState& state, Rng& rng) {
  if (state.arms.empty()) throw ConfigError("bandit has no arms");
  std::size_t best = 0;
  double best_draw = -1.0;
  for (std::size_t i = 0; i < state.arms.size(); ++i) {
    const auto& a = state.arms[i];
    const double r = sample_beta(rng, static_cast<double>(a.alpha), static_cast<double>(a.beta));
    if (r > best_draw) {
      best_draw = r;
      best = i;
    }
  }
  return {best, state.arms[best].omega};
}

inline void bandit_update(BanditState& state, std::size_t pulled_arm, double validation_return) {
  if (!std::isfinite(validation_return)) throw InputError("bandit_update: non-finite validation return");
  if (pulled_arm >= state.arms.size()) throw InputError("bandit_update: arm index out of range");
  if (state.last_validation_return) {
    auto& arm = state.arms[pulled_arm];
    if (validation_return > *state.last_validation_return)
      ++arm.alpha;
    else
      ++arm.beta;
  }
  state.last_validation_return = validation_return;
}

}  // namespace adp
