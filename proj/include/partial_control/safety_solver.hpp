#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "arrival_search.hpp"
#include "disturbance.hpp"
#include "grid.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "state.hpp"

namespace partial_control {

/// The disturbed images f(q_i) + xi_s. Only the N undisturbed images are
/// stored; image(i, s) adds the sample on demand, always with the same
/// expression, so every consumer sees bit-identical images.
struct ImageTable {
  std::vector<State> base;
  std::vector<State> samples;

  std::size_t points() const { return base.size(); }
  std::size_t samples_per_point() const { return samples.size(); }
  std::size_t size() const { return base.size() * samples.size(); }
  State image(std::size_t i, std::size_t s) const { return base[i] + samples[s]; }
};

inline ImageTable image_table(const MapSystem& map, const GridRegion& region, const DisturbanceModel& model) {
  if (map.dimension() != region.dimension())
    throw std::invalid_argument("map '" + map.name() + "' is " + std::to_string(map.dimension()) +
                                "-dimensional but the grid is " + std::to_string(region.dimension()) + "-dimensional");
  if (model.dimension != region.dimension())
    throw std::invalid_argument("disturbance and grid dimensions differ");
  ImageTable t;
  t.samples = model.samples;
  t.base.resize(region.size());
  for (std::size_t i = 0; i < region.size(); ++i) t.base[i] = map(region.point(i));
  return t;
}

/// One application of the update operator to U_k (Jacobi: reads only U_k).
/// This is the unoptimized reference; SafetySolver reaches the same values
/// faster.
inline std::vector<double> update_sweep(const std::vector<double>& u, const ImageTable& images,
                                        const GridRegion& region, Metric metric, unsigned workers = 1) {
  ArrivalSearch search(region, metric);
  search.assign(u);
  std::vector<double> next(u.size());
  const std::size_t chunk = 1024;
  const std::size_t chunks = (u.size() + chunk - 1) / chunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(u.size(), (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      double worst = -kInfinity;
      for (std::size_t s = 0; s < images.samples_per_point(); ++s)
        worst = std::max(worst, search.inner_min_above(images.image(i, s), worst).value);
      next[i] = worst;
    }
  });
  return next;
}

struct SweepStats {
  unsigned sweep = 0;
  std::size_t changed = 0;
  std::size_t skipped = 0;
  std::size_t searches = 0;
  double min_value = 0.0;
  double max_value = 0.0;
  double seconds = 0.0;
};

struct SolverOptions {
  unsigned max_sweeps = 1000;
  unsigned workers = 0;  // 0: hardware concurrency
  std::function<void(const SweepStats&)> progress;
};

struct SafetyFunction {
  GridRegion region;
  std::vector<double> values;
  unsigned sweeps = 0;
  bool converged = false;
  double min_value = 0.0;
  std::vector<std::size_t> argmin;
  /// U_{k+1} >= U_k held for every point in every sweep.
  bool monotone = true;
  std::vector<SweepStats> history;
};

inline void summarize(SafetyFunction& u) {
  u.min_value = u.values.empty() ? 0.0 : *std::min_element(u.values.begin(), u.values.end());
  u.argmin.clear();
  for (std::size_t i = 0; i < u.values.size(); ++i)
    if (u.values[i] == u.min_value) u.argmin.push_back(i);
}

/**
 * Fixed-point iteration of the update operator starting from U_0 = 0.
 *
 * The iterates increase monotonically, so U_k[i] is a lower bound for
 * U_{k+1}[i] and each point only has to check that every disturbed image can
 * still reach some arrival at cost <= U_k[i]; an exact search is needed only
 * for images that cannot. Samples are grouped in a bisection tree: a group
 * of radius r around image c is settled at once when a single arrival j has
 * max(|c - q_j| + r, U_j) <= U_k[i].
 *
 * Each point records the arrivals that certified its value. When none of them
 * changed in the previous sweep, the point's value cannot change either and
 * it is skipped.
 *
 * Points are processed in fixed chunks; a chunk's result does not depend on
 * which worker runs it, so output is identical for any worker count.
 */
class SafetySolver {
 public:
  SafetySolver(const MapSystem& map, const GridRegion& region, const DisturbanceModel& model,
               SolverOptions options = {})
      : region_(region),
        metric_(model.metric()),
        images_(image_table(map, region_, model)),
        search_(region_, metric_),
        options_(std::move(options)) {
    if (region_.size() >= std::numeric_limits<std::uint32_t>::max())
      throw std::invalid_argument("grid too large");
    build_tree(model.samples);
    const std::size_t n = region_.size();
    values_.assign(n, 0.0);
    next_.assign(n, 0.0);
    memo_.assign(n, -1);
    changed_.assign(n, 1);
    chunks_.resize((n + kChunk - 1) / kChunk);
  }

  SafetySolver(const SafetySolver&) = delete;
  SafetySolver& operator=(const SafetySolver&) = delete;

  const std::vector<double>& values() const { return values_; }
  const ImageTable& images() const { return images_; }
  const GridRegion& region() const { return region_; }
  Metric metric() const { return metric_; }
  unsigned sweeps() const { return sweeps_; }
  bool monotone() const { return monotone_; }

  /// Performs one sweep; returns true when it changed nothing.
  bool sweep() {
    const auto start = std::chrono::steady_clock::now();
    search_.assign(values_);
    const bool first = sweeps_ == 0;
    parallel_for(chunks_.size(), options_.workers, [&](std::size_t c) { process_chunk(c, first); });

    SweepStats stats;
    stats.sweep = ++sweeps_;
    for (auto& ch : chunks_) {
      stats.skipped += ch.skipped;
      stats.searches += ch.searches;
      std::swap(ch.offsets, ch.next_offsets);
      std::swap(ch.arrivals, ch.next_arrivals);
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      changed_[i] = next_[i] != values_[i];
      stats.changed += changed_[i];
      if (next_[i] < values_[i]) monotone_ = false;
    }
    values_.swap(next_);
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    stats.min_value = *lo;
    stats.max_value = *hi;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history_.push_back(stats);
    if (options_.progress) options_.progress(stats);
    return stats.changed == 0;
  }

  SafetyFunction run() {
    bool converged = false;
    while (!converged && sweeps_ < options_.max_sweeps) converged = sweep();
    SafetyFunction u;
    u.region = region_;
    u.values = values_;
    u.sweeps = sweeps_;
    u.converged = converged;
    u.monotone = monotone_;
    u.history = history_;
    summarize(u);
    return u;
  }

 private:
  static constexpr std::size_t kChunk = 2048;

  struct TreeNode {
    State center;
    double radius = 0.0;
    int sample = -1;  // leaves only
    int left = -1, right = -1;
  };

  struct Chunk {
    std::vector<std::uint32_t> offsets, arrivals;
    std::vector<std::uint32_t> next_offsets, next_arrivals;
    std::size_t skipped = 0, searches = 0;
  };

  int build_node(std::vector<int>& ids, std::size_t lo, std::size_t hi, const std::vector<State>& samples) {
    TreeNode node;
    for (std::size_t k = lo; k < hi; ++k) node.center = node.center + samples[ids[k]];
    const double count = static_cast<double>(hi - lo);
    node.center = {node.center.x / count, node.center.y / count};
    for (std::size_t k = lo; k < hi; ++k)
      node.radius = std::max(node.radius, metric_.distance(samples[ids[k]], node.center));
    const int id = static_cast<int>(tree_.size());
    tree_.push_back(node);
    if (hi - lo == 1) {
      tree_[id].sample = ids[lo];
      tree_[id].radius = 0.0;
      tree_[id].center = samples[ids[lo]];
      return id;
    }
    double x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity, y1 = -kInfinity;
    for (std::size_t k = lo; k < hi; ++k) {
      x0 = std::min(x0, samples[ids[k]].x);
      x1 = std::max(x1, samples[ids[k]].x);
      y0 = std::min(y0, samples[ids[k]].y);
      y1 = std::max(y1, samples[ids[k]].y);
    }
    const bool split_x = x1 - x0 >= y1 - y0;
    std::sort(ids.begin() + lo, ids.begin() + hi, [&](int a, int b) {
      const State p = samples[a], q = samples[b];
      return split_x ? (p.x < q.x || (p.x == q.x && p.y < q.y)) : (p.y < q.y || (p.y == q.y && p.x < q.x));
    });
    const std::size_t mid = (lo + hi) / 2;
    const int left = build_node(ids, lo, mid, samples);
    const int right = build_node(ids, mid, hi, samples);
    tree_[id].left = left;
    tree_[id].right = right;
    return id;
  }

  void build_tree(const std::vector<State>& samples) {
    if (samples.empty()) throw std::invalid_argument("disturbance sample set is empty");
    std::vector<int> ids(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) ids[s] = static_cast<int>(s);
    tree_.reserve(2 * samples.size());
    build_node(ids, 0, samples.size(), samples);
  }

  // Per-point working state while evaluating one point.
  struct Eval {
    State base;
    double value;
    std::size_t hint;
    int memo;
    std::vector<std::uint32_t>* out;
    std::size_t first;
    std::size_t searches = 0;

    void record(std::size_t j) {
      if (out->size() == first || out->back() != j) out->push_back(static_cast<std::uint32_t>(j));
    }
  };

  void walk(Eval& e, int id) const {
    const TreeNode& t = tree_[id];
    if (t.sample < 0) {
      const double tol = 1e-9 * (1.0 + e.value);
      if (search_.admits(e.base + t.center, t.radius + tol, e.value, e.hint)) {
        e.record(e.hint);
        return;
      }
      walk(e, t.left);
      walk(e, t.right);
      return;
    }
    const State x = e.base + images_.samples[t.sample];
    if (search_.admits(x, 0.0, e.value, e.hint)) {
      e.record(e.hint);
      return;
    }
    ++e.searches;
    const Arrival a = search_.inner_min_above(x, e.value);
    e.hint = a.index;
    e.record(a.index);
    if (a.value > e.value) {
      e.value = a.value;
      e.memo = t.sample;
    }
  }

  bool unchanged_witnesses(const Chunk& ch, std::size_t local) const {
    for (std::uint32_t t = ch.offsets[local]; t < ch.offsets[local + 1]; ++t)
      if (changed_[ch.arrivals[t]]) return false;
    return true;
  }

  void process_chunk(std::size_t c, bool first) {
    Chunk& ch = chunks_[c];
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(values_.size(), begin + kChunk);
    ch.skipped = ch.searches = 0;
    ch.next_offsets.assign(end - begin + 1, 0);
    ch.next_arrivals.clear();
    std::size_t hint = kNoIndex;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t local = i - begin;
      ch.next_offsets[local] = static_cast<std::uint32_t>(ch.next_arrivals.size());
      if (!first && unchanged_witnesses(ch, local)) {
        ch.next_arrivals.insert(ch.next_arrivals.end(), ch.arrivals.begin() + ch.offsets[local],
                                ch.arrivals.begin() + ch.offsets[local + 1]);
        next_[i] = values_[i];
        ++ch.skipped;
        continue;
      }
      Eval e{images_.base[i], values_[i], hint, memo_[i], &ch.next_arrivals, ch.next_arrivals.size()};
      if (e.memo >= 0) {
        ++e.searches;
        const Arrival a = search_.inner_min_above(images_.image(i, static_cast<std::size_t>(e.memo)), e.value);
        e.hint = a.index;
        e.record(a.index);
        e.value = std::max(e.value, a.value);
      }
      walk(e, 0);
      next_[i] = e.value;
      memo_[i] = e.memo;
      hint = e.hint;
      ch.searches += e.searches;
    }
    ch.next_offsets[end - begin] = static_cast<std::uint32_t>(ch.next_arrivals.size());
  }

  GridRegion region_;
  Metric metric_;
  ImageTable images_;
  ArrivalSearch search_;
  SolverOptions options_;
  std::vector<TreeNode> tree_;
  std::vector<double> values_, next_;
  std::vector<int> memo_;
  std::vector<std::uint8_t> changed_;
  std::vector<Chunk> chunks_;
  std::vector<SweepStats> history_;
  unsigned sweeps_ = 0;
  bool monotone_ = true;
};

inline SafetyFunction compute_safety_function(const MapSystem& map, const GridRegion& region,
                                              const DisturbanceModel& model, unsigned max_sweeps = 1000,
                                              SolverOptions options = {}) {
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be at least 1");
  options.max_sweeps = max_sweeps;
  SafetySolver solver(map, region, model, std::move(options));
  return solver.run();
}

}  // namespace partial_control
