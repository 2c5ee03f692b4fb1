#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "adp/errors.hpp"
#include "adp/random.hpp"

namespace adp {

// One randomized dynamics parameter. Sampling happens in scale units,
// i.e. multiples of the environment's native default.
struct ParamSpec {
  std::string name;
  double default_value = 1.0;
  double scale_low = 0.8;
  double scale_high = 1.2;
};

// Scale factors relative to the defaults, one per dimension of a space.
struct ParamVector {
  std::vector<double> scales;

  std::size_t size() const { return scales.size(); }
  double operator[](std::size_t i) const { return scales[i]; }
  double& operator[](std::size_t i) { return scales[i]; }
  bool operator==(const ParamVector&) const = default;
};

class RandomizationSpace {
 public:
  RandomizationSpace() = default;

  explicit RandomizationSpace(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw ConfigError("randomization space needs at least one parameter");
    std::unordered_set<std::string> seen;
    for (const auto& s : specs_) {
      if (!(s.scale_low < s.scale_high))
        throw ConfigError("parameter '" + s.name + "': scale_low must be < scale_high");
      if (s.default_value == 0.0)
        throw ConfigError("parameter '" + s.name + "': default must be non-zero");
      if (!seen.insert(s.name).second)
        throw ConfigError("duplicate parameter name '" + s.name + "'");
    }
  }

  std::size_t dim() const { return specs_.size(); }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec& spec(std::size_t i) const { return specs_.at(i); }

  // Index of a named parameter, or -1.
  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
      if (specs_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  bool contains(const ParamVector& xi) const {
    if (xi.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (xi[i] < specs_[i].scale_low || xi[i] > specs_[i].scale_high) return false;
    return true;
  }

  // Same names and defaults with every range replaced by [low, high].
  RandomizationSpace with_range(double low, double high) const {
    auto specs = specs_;
    for (auto& s : specs) {
      s.scale_low = low;
      s.scale_high = high;
    }
    return RandomizationSpace(std::move(specs));
  }

 private:
  std::vector<ParamSpec> specs_;
};

inline ParamVector sample_uniform(const RandomizationSpace& space, Rng& rng) {
  ParamVector xi;
  xi.scales.reserve(space.dim());
  for (const auto& s : space.specs()) xi.scales.push_back(uniform(rng, s.scale_low, s.scale_high));
  return xi;
}

struct BinIndex {
  std::vector<int> ordinals;

  auto operator<=>(const BinIndex&) const = default;
  bool operator==(const BinIndex&) const = default;
};

// Axis-aligned discretization of a randomization space into bins of width
// `bin_width` (scale units). Bins are half-open except the top one, which is
// closed so that every point of the box has a bin.
class BinGrid {
 public:
  BinGrid(RandomizationSpace space, double bin_width)
      : space_(std::move(space)), bin_width_(bin_width) {
    if (!(bin_width_ > 0.0) || !std::isfinite(bin_width_))
      throw ConfigError("bin_width must be a positive finite number");
    for (const auto& s : space_.specs()) {
      const double span = (s.scale_high - s.scale_low) / bin_width_;
      // Guard against ceil(40.000000000000007) style round-off.
      const double nearest = std::round(span);
      const double count = std::abs(span - nearest) < 1e-9 ? nearest : std::ceil(span);
      bins_per_dim_.push_back(std::max(1, static_cast<int>(count)));
    }
  }

  const RandomizationSpace& space() const { return space_; }
  double bin_width() const { return bin_width_; }
  const std::vector<int>& bins_per_dim() const { return bins_per_dim_; }

  long long total_bins() const {
    long long n = 1;
    for (int b : bins_per_dim_) n *= b;
    return n;
  }

  BinIndex bin_of(const ParamVector& xi) const {
    if (xi.size() != space_.dim())
      throw RangeError("parameter vector has " + std::to_string(xi.size()) + " dimensions, grid has " +
                       std::to_string(space_.dim()));
    BinIndex idx;
    idx.ordinals.resize(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
      const auto& s = space_.spec(i);
      if (!(xi[i] >= s.scale_low && xi[i] <= s.scale_high))
        throw RangeError("dimension " + std::to_string(i) + " ('" + s.name + "') value " +
                         std::to_string(xi[i]) + " outside [" + std::to_string(s.scale_low) + ", " +
                         std::to_string(s.scale_high) + "]");
      // (1.0 - 0.8) / 0.01 evaluates to 19.999999999999996; snap values within
      // round-off of a bin edge onto that edge.
      const double q = (xi[i] - s.scale_low) / bin_width_;
      const int k = static_cast<int>(std::floor(q + 1e-9 * std::max(1.0, std::abs(q))));
      idx.ordinals[i] = std::clamp(k, 0, bins_per_dim_[i] - 1);
    }
    return idx;
  }

  ParamVector center_of(const BinIndex& idx) const {
    if (idx.ordinals.size() != space_.dim())
      throw RangeError("bin index has wrong dimensionality");
    ParamVector xi;
    xi.scales.resize(idx.ordinals.size());
    for (std::size_t i = 0; i < idx.ordinals.size(); ++i) {
      const int k = idx.ordinals[i];
      if (k < 0 || k >= bins_per_dim_[i])
        throw RangeError("dimension " + std::to_string(i) + ": ordinal " + std::to_string(k) +
                         " outside [0, " + std::to_string(bins_per_dim_[i]) + ")");
      const auto& s = space_.spec(i);
      xi.scales[i] = std::min(s.scale_low + (k + 0.5) * bin_width_, s.scale_high);
    }
    return xi;
  }

 private:
  RandomizationSpace space_;
  double bin_width_;
  std::vector<int> bins_per_dim_;
};

}  // namespace adp
