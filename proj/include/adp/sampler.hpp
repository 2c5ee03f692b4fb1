#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "adp/errors.hpp"
#include "adp/param_space.hpp"
#include "adp/random.hpp"

namespace adp {

// Score returned for bins that have never been trained on. It ranks above
// every stored score, so unseen bins always lead on informativeness.
inline constexpr double kUnseenInformativeness = std::numeric_limits<double>::infinity();

// Sparse informativeness (latest |GAE| score) and visit-count tables keyed by bin.
struct ScoreTables {
  std::map<BinIndex, double> isf;
  std::map<BinIndex, long long> counts;
  long long total_count = 0;

  double informativeness(const BinIndex& bin) const {
    const auto it = isf.find(bin);
    return it == isf.end() ? kUnseenInformativeness : it->second;
  }

  double density(const BinIndex& bin) const {
    if (total_count == 0) return 0.0;
    const auto it = counts.find(bin);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total_count);
  }
};

class ParamReplayBuffer {
 public:
  explicit ParamReplayBuffer(std::size_t capacity = 40) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be >= 1");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ParamVector& operator[](std::size_t i) const { return entries_[i]; }
  const std::deque<ParamVector>& entries() const { return entries_; }

  void push(const ParamVector& xi) {
    entries_.push_back(xi);
    while (entries_.size() > capacity_) entries_.pop_front();
  }

 private:
  std::size_t capacity_;
  std::deque<ParamVector> entries_;
};

inline void buffer_insert(ParamReplayBuffer& buffer, const std::vector<ParamVector>& selected) {
  for (const auto& xi : selected) buffer.push(xi);
}

struct Candidate {
  ParamVector params;
  BinIndex bin;
  bool from_buffer = false;
  double raw_informativeness = 0.0;
  double raw_density = 0.0;
  int informativeness_rank = 0;
  int density_rank = 0;
};

using CandidateSet = std::vector<Candidate>;

struct CandidateCounts {
  int from_space = 30;
  int from_buffer = 10;
};

// `from_space` uniform draws, then up to `from_buffer` buffer entries drawn
// without replacement; any buffer shortfall is made up with more uniform draws.
inline CandidateSet sample_candidates(const RandomizationSpace& space, const ParamReplayBuffer& buffer,
                                      const BinGrid& grid, Rng& rng, CandidateCounts counts = {}) {
  CandidateSet out;
  auto add = [&](ParamVector xi, bool from_buffer) {
    Candidate c;
    c.bin = grid.bin_of(xi);
    c.params = std::move(xi);
    c.from_buffer = from_buffer;
    out.push_back(std::move(c));
  };
  for (int i = 0; i < counts.from_space; ++i) add(sample_uniform(space, rng), false);

  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(counts.from_buffer), buffer.size());
  std::vector<std::size_t> idx(buffer.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < take; ++i) {
    // Partial Fisher-Yates.
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, idx.size() - 1)(rng);
    std::swap(idx[i], idx[j]);
    add(buffer[idx[i]], true);
  }
  for (std::size_t i = take; i < static_cast<std::size_t>(counts.from_buffer); ++i)
    add(sample_uniform(space, rng), false);
  return out;
}

inline void score_candidates(const ScoreTables& tables, CandidateSet& cands) {
  for (auto& c : cands) {
    c.raw_informativeness = tables.informativeness(c.bin);
    c.raw_density = tables.density(c.bin);
  }
}

// Rank 1 goes to the largest value; ties keep candidate order.
inline std::vector<int> rank_scores(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<int> ranks(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
  return ranks;
}

inline void rank_candidates(CandidateSet& cands) {
  std::vector<double> info, dens;
  for (const auto& c : cands) {
    info.push_back(c.raw_informativeness);
    dens.push_back(c.raw_density);
  }
  const auto ri = rank_scores(info);
  const auto rd = rank_scores(dens);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    cands[i].informativeness_rank = ri[i];
    cands[i].density_rank = rd[i];
  }
}

// Per-candidate term of the selection objective, (1 - w) I_rank - w D_rank.
inline double selection_score(int informativeness_rank, int density_rank, double omega) {
  return (1.0 - omega) * informativeness_rank - omega * density_rank;
}

// The objective is a sum of per-candidate terms, so its minimizing m-subset
// is the m smallest terms. Returns candidate indices in selection order.
inline std::vector<std::size_t> select_subset(const std::vector<int>& informativeness_ranks,
                                              const std::vector<int>& density_ranks, double omega, std::size_t m) {
  const std::size_t n = informativeness_ranks.size();
  if (density_ranks.size() != n) throw InputError("select_subset: rank vectors differ in length");
  if (m > n) throw InputError("select_subset: cannot pick " + std::to_string(m) + " of " + std::to_string(n));
  if (!(omega >= 0.0 && omega <= 1.0)) throw InputError("select_subset: omega must lie in [0, 1]");
  // Scores that are equal in exact arithmetic can differ in the last ulp
  // (0.8 * 1 - 0.2 * 1 vs 0.8 * 2 - 0.2 * 5); compare on a 1e-9 grid.
  std::vector<long long> key(n);
  for (std::size_t i = 0; i < n; ++i)
    key[i] = std::llround(selection_score(informativeness_ranks[i], density_ranks[i], omega) * 1e9);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  order.resize(m);
  return order;
}

inline std::vector<std::size_t> select_subset(const CandidateSet& cands, double omega, std::size_t m) {
  std::vector<int> ri, rd;
  for (const auto& c : cands) {
    ri.push_back(c.informativeness_rank);
    rd.push_back(c.density_rank);
  }
  return select_subset(ri, rd, omega, m);
}

// Replaces the stored score of every measured bin and adds one visit per
// selection (a bin selected twice this iteration counts twice).
inline void update_tables(ScoreTables& tables, const std::vector<BinIndex>& selected_bins,
                          const std::map<BinIndex, double>& measured) {
  for (const auto& bin : selected_bins) {
    const auto it = measured.find(bin);
    if (it == measured.end()) throw LookupError("update_tables: no measured score for a selected bin");
    tables.isf[bin] = it->second;
    ++tables.counts[bin];
    ++tables.total_count;
  }
}

}  // namespace adp
