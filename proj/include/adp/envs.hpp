#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "adp/errors.hpp"
#include "adp/param_space.hpp"
#include "adp/random.hpp"

namespace adp {

enum class EnvKind { kPointMass, kPendulum, kCartpole };

inline std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kPointMass: return "point_mass";
    case EnvKind::kPendulum: return "pendulum";
    case EnvKind::kCartpole: return "cartpole";
  }
  return "unknown";
}

inline EnvKind parse_env_kind(const std::string& name) {
  if (name == "point_mass") return EnvKind::kPointMass;
  if (name == "pendulum") return EnvKind::kPendulum;
  if (name == "cartpole") return EnvKind::kCartpole;
  throw ConfigError("unknown environment kind '" + name + "'");
}

// Static description of an environment kind.
struct EnvInfo {
  EnvKind kind;
  int obs_dim;
  int act_dim;
  int horizon;
  double dt;
  // Semi-implicit Euler substeps per control interval.
  int substeps;
  double action_bound;
  double reward_bound;
  // Observation entries that carry velocities (targets of observation noise).
  std::vector<std::size_t> velocity_obs;
  // All four physical parameters with their native defaults, ranges default x [0.8, 1.2].
  RandomizationSpace params;
};

inline const EnvInfo& env_info(EnvKind kind) {
  auto space = [](std::initializer_list<std::pair<const char*, double>> items) {
    std::vector<ParamSpec> specs;
    for (const auto& [name, value] : items) specs.push_back({name, value, 0.8, 1.2});
    return RandomizationSpace(std::move(specs));
  };
  static const EnvInfo point_mass{EnvKind::kPointMass, 4, 2, 100, 0.05, 20, 1.0, 10.0, {2, 3},
                                  space({{"mass", 1.0}, {"damping_x", 1.0}, {"damping_y", 1.0},
                                         {"action_gain", 1.0}})};
  static const EnvInfo pendulum{EnvKind::kPendulum, 3, 1, 200, 0.05, 600, 2.0, 16.5, {2},
                                space({{"mass", 1.0}, {"length", 1.0}, {"damping", 0.1},
                                       {"gravity", 9.81}})};
  static const EnvInfo cartpole{EnvKind::kCartpole, 4, 1, 200, 0.02, 200, 1.0, 1.0, {1, 3},
                                space({{"cart_mass", 1.0}, {"pole_mass", 0.1},
                                       {"pole_half_length", 0.5}, {"cart_friction", 0.0005}})};
  switch (kind) {
    case EnvKind::kPointMass: return point_mass;
    case EnvKind::kPendulum: return pendulum;
    case EnvKind::kCartpole: return cartpole;
  }
  throw ConfigError("unknown environment kind");
}

// Lifts a vector over `space` (a subset of the kind's parameters) to the
// kind's full four-parameter vector; parameters not in `space` stay at 1.0.
inline ParamVector expand_scales(EnvKind kind, const RandomizationSpace& space, const ParamVector& xi) {
  const auto& full = env_info(kind).params;
  if (xi.size() != space.dim()) throw ConfigError("parameter vector does not match its space");
  ParamVector out{std::vector<double>(full.dim(), 1.0)};
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const int j = full.index_of(space.spec(i).name);
    if (j < 0)
      throw ConfigError("environment '" + to_string(kind) + "' has no parameter '" + space.spec(i).name + "'");
    out[static_cast<std::size_t>(j)] = xi[i];
  }
  return out;
}

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  // True when `done` came from the failure predicate rather than the horizon.
  bool failed = false;
};

inline double wrap_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w - std::numbers::pi;
}

class Environment {
 public:
  static constexpr double kArena = 5.0;
  static constexpr double kMaxAngularVelocity = 8.0;
  static constexpr double kPoleAngleLimit = 0.21;
  static constexpr double kCartLimit = 2.4;
  static constexpr double kForceScale = 10.0;
  static constexpr double kCartpoleGravity = 9.8;

  Environment(EnvKind kind, const ParamVector& scales, std::uint64_t seed)
      : info_(&env_info(kind)), scales_(scales), rng_(seed) {
    if (scales.size() != info_->params.dim())
      throw ConfigError(to_string(kind) + " expects " + std::to_string(info_->params.dim()) +
                        " parameter scales, got " + std::to_string(scales.size()));
    for (std::size_t i = 0; i < scales.size(); ++i) {
      if (!std::isfinite(scales[i])) throw ConfigError("non-finite parameter scale");
      native_[i] = info_->params.spec(i).default_value * scales[i];
    }
    state_.assign(state_dim(), 0.0);
  }

  EnvKind kind() const { return info_->kind; }
  const EnvInfo& info() const { return *info_; }
  const ParamVector& scales() const { return scales_; }
  int step_count() const { return step_count_; }

  // Physical value of parameter i (default x scale).
  double native(std::size_t i) const { return native_.at(i); }

  std::size_t state_dim() const { return info_->kind == EnvKind::kPendulum ? 2 : 4; }
  const std::vector<double>& state() const { return state_; }

  void set_state(std::span<const double> s) {
    if (s.size() != state_dim()) throw InputError("state has wrong dimension");
    state_.assign(s.begin(), s.end());
  }

  std::vector<double> reset() {
    step_count_ = 0;
    switch (info_->kind) {
      case EnvKind::kPointMass:
        state_ = {uniform(rng_, -0.1, 0.1), uniform(rng_, -0.1, 0.1), 0.0, 0.0};
        break;
      case EnvKind::kPendulum:
        state_ = {uniform(rng_, -std::numbers::pi, std::numbers::pi), uniform(rng_, -1.0, 1.0)};
        break;
      case EnvKind::kCartpole:
        for (auto& v : state_) v = uniform(rng_, -0.05, 0.05);
        break;
    }
    return observation();
  }

  std::vector<double> observation() const {
    if (info_->kind == EnvKind::kPendulum)
      return {std::cos(state_[0]), std::sin(state_[0]), state_[1]};
    return state_;
  }

  StepResult step(std::span<const double> action) {
    if (action.size() != static_cast<std::size_t>(info_->act_dim))
      throw InputError(to_string(info_->kind) + " expects action of dimension " +
                       std::to_string(info_->act_dim));
    std::array<double, 2> a{};
    for (std::size_t i = 0; i < action.size(); ++i) {
      if (!std::isfinite(action[i])) throw InputError("non-finite action component " + std::to_string(i));
      a[i] = std::clamp(action[i], -info_->action_bound, info_->action_bound);
    }

    const double h = info_->dt / info_->substeps;
    for (int k = 0; k < info_->substeps; ++k) integrate(a, h);
    ++step_count_;

    StepResult out;
    out.observation = observation();
    switch (info_->kind) {
      case EnvKind::kPointMass: {
        const double dx = state_[0] - 1.0, dy = state_[1] - 1.0;
        out.reward = -std::sqrt(dx * dx + dy * dy) - 0.001 * (a[0] * a[0] + a[1] * a[1]);
        break;
      }
      case EnvKind::kPendulum: {
        const double th = wrap_angle(state_[0]);
        out.reward = -(th * th + 0.1 * state_[1] * state_[1] + 0.001 * a[0] * a[0]);
        break;
      }
      case EnvKind::kCartpole:
        out.reward = 1.0 - 0.001 * a[0] * a[0];
        out.failed = std::abs(state_[2]) > kPoleAngleLimit || std::abs(state_[0]) > kCartLimit;
        break;
    }
    for (double v : state_)
      if (!std::isfinite(v)) throw NumericalError(to_string(info_->kind) + ": state diverged");
    out.done = out.failed || step_count_ >= info_->horizon;
    return out;
  }

 private:
  // One semi-implicit Euler substep: velocities first, then positions.
  void integrate(const std::array<double, 2>& a, double h) {
    auto& s = state_;
    switch (info_->kind) {
      case EnvKind::kPointMass: {
        const double m = native_[0], bx = native_[1], by = native_[2], gain = native_[3];
        s[2] += h * (gain * a[0] - bx * s[2]) / m;
        s[3] += h * (gain * a[1] - by * s[3]) / m;
        s[0] += h * s[2];
        s[1] += h * s[3];
        for (int i = 0; i < 2; ++i) {
          if (std::abs(s[i]) > kArena) {
            s[i] = std::copysign(kArena, s[i]);
            s[i + 2] = 0.0;
          }
        }
        break;
      }
      case EnvKind::kPendulum: {
        const double m = native_[0], l = native_[1], b = native_[2], g = native_[3];
        const double acc = 3.0 * g / (2.0 * l) * std::sin(s[0]) + 3.0 / (m * l * l) * (a[0] - b * s[1]);
        s[1] = std::clamp(s[1] + h * acc, -kMaxAngularVelocity, kMaxAngularVelocity);
        s[0] += h * s[1];
        break;
      }
      case EnvKind::kCartpole: {
        const double cart = native_[0], pole = native_[1], l = native_[2], mu = native_[3];
        const double total = cart + pole;
        const double force = kForceScale * a[0];
        const double sin_t = std::sin(s[2]), cos_t = std::cos(s[2]);
        const double sgn = s[1] > 0.0 ? 1.0 : (s[1] < 0.0 ? -1.0 : 0.0);
        const double theta_acc =
            (kCartpoleGravity * sin_t + cos_t * (-force - pole * l * s[3] * s[3] * sin_t + mu * sgn) / total) /
            (l * (4.0 / 3.0 - pole * cos_t * cos_t / total));
        const double x_acc = (force + pole * l * (s[3] * s[3] * sin_t - theta_acc * cos_t) - mu * sgn) / total;
        s[1] += h * x_acc;
        s[3] += h * theta_acc;
        s[0] += h * s[1];
        s[2] += h * s[3];
        break;
      }
    }
  }

  const EnvInfo* info_;
  ParamVector scales_;
  std::array<double, 4> native_{};
  std::vector<double> state_;
  int step_count_ = 0;
  Rng rng_;
};

inline Environment make_env(EnvKind kind, const ParamVector& scales, std::uint64_t seed) {
  return Environment(kind, scales, seed);
}

enum class NoiseTarget { kObservation, kAction };

struct NoiseSpec {
  NoiseTarget target = NoiseTarget::kObservation;
  double sigma = 0.0;
  // Perturbed components; empty means every component.
  std::vector<std::size_t> components;
};

inline NoiseSpec observation_noise(EnvKind kind, double sigma) {
  return {NoiseTarget::kObservation, sigma, env_info(kind).velocity_obs};
}

inline NoiseSpec action_noise(double sigma) { return {NoiseTarget::kAction, sigma, {}}; }

inline std::vector<double> apply_noise(std::vector<double> x, const NoiseSpec& spec, Rng& rng) {
  if (spec.sigma < 0.0) throw InputError("noise sigma must be non-negative");
  if (spec.sigma == 0.0) return x;
  if (spec.components.empty()) {
    for (auto& v : x) v += spec.sigma * standard_normal(rng);
  } else {
    for (auto i : spec.components) x.at(i) += spec.sigma * standard_normal(rng);
  }
  return x;
}

}  // namespace adp
