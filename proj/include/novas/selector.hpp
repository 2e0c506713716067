#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "novas/cv.hpp"
#include "novas/dataset.hpp"
#include "novas/errors.hpp"
#include "novas/index_set.hpp"
#include "novas/kernel.hpp"
#include "novas/parallel.hpp"

namespace novas {

struct SelectorConfig {
  /// Minimum relative gain needed to accept the next stage.
  double threshold = 0.05;
  /// Computing budget q; the first stage keeps floor(sqrt(q)) singletons. Defaults to p.
  std::optional<std::size_t> budget_q;
  std::size_t max_stages = 10;
  BandwidthGrid grid;
  WeightFn weight;
  /// Only consumed by simulation drivers; selection itself is deterministic.
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// When nonzero, run exactly this many stages and ignore the gain rule.
  std::size_t forced_stages = 0;
  LocalFitOptions fit;

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (budget_q && *budget_q < 4) throw ConfigError("budget q must be at least 4");
    if (max_stages < 1) throw ConfigError("max_stages must be positive");
    if (threads < 1) throw ConfigError("thread count must be positive");
  }

  std::size_t effective_budget(std::size_t p) const { return budget_q.value_or(std::max<std::size_t>(p, 4)); }

  /// max(2, floor(sqrt(q))), capped at p.
  std::size_t retained_per_stage(std::size_t p) const {
    const std::size_t q = effective_budget(p);
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(q)));
    while (r * r > q) --r;
    while ((r + 1) * (r + 1) <= q) ++r;
    return std::min(p, std::max<std::size_t>(2, r));
  }
};

struct StageRecord {
  std::size_t stage = 0;
  /// Ranked candidates of this stage, truncated to the retention count.
  std::vector<SubsetCandidate> ranked;
  SubsetCandidate best;
  /// Unions formed before filtering (stage 1: the p singletons).
  std::size_t generated = 0;
  /// New subsets scored in this stage.
  std::size_t scored = 0;
  /// Unions dropped for equalling one of their parents.
  std::size_t parent_equal = 0;
  /// Unions dropped as repeats of a subset already scored or queued.
  std::size_t cache_hits = 0;
  /// Cumulative counters after this stage.
  std::size_t fits_evaluated = 0;
  std::size_t subset_fits = 0;
};

struct SelectionTrace {
  std::string selector;
  std::vector<StageRecord> stages;
  IndexSet final_subset;
  double final_score = 0.0;
  double final_bandwidth = 0.0;
  /// Stage whose best subset was returned.
  std::size_t final_stage = 0;
  std::size_t fits_evaluated = 0;
  std::size_t subset_fits = 0;
  /// Generated unions that repeated a subset already scored or queued.
  std::size_t cache_hits = 0;
  std::string stop_reason;
};

namespace detail {

/// Scores subsets once each, in parallel, memoising by canonical key.
class ScoreCache {
 public:
  ScoreCache(const Dataset& data, const SelectorConfig& cfg)
      : data_(data), cfg_(cfg), workspaces_(std::max(1u, cfg.threads)) {}

  bool contains(const IndexSet& s) const { return cache_.contains(s); }

  /// Scores every subset in `batch` (assumed distinct and uncached).
  std::vector<SubsetCandidate> score(const std::vector<IndexSet>& batch) {
    std::vector<SubsetCandidate> out(batch.size());
    parallel_for(batch.size(), cfg_.threads, [&](std::size_t k, unsigned worker) {
      const auto choice = select_bandwidth(data_, batch[k], cfg_.grid, cfg_.weight, workspaces_[worker], cfg_.fit);
      out[k] = {batch[k], choice.score, choice.bandwidth};
    });
    for (const auto& c : out) {
      cache_.emplace(c.indices, c);
      fits_evaluated += cfg_.grid.size();
      ++subset_fits;
    }
    return out;
  }

  std::size_t fits_evaluated = 0;
  std::size_t subset_fits = 0;

 private:
  const Dataset& data_;
  const SelectorConfig& cfg_;
  std::vector<LocalFitWorkspace> workspaces_;
  std::unordered_map<IndexSet, SubsetCandidate, IndexSetHash> cache_;
};

inline void check_selectable(const Dataset& data, const SelectorConfig& cfg) {
  cfg.validate();
  data.validate();
  if (!data.standardized) throw DataError("selection requires a standardized dataset");
  if (data.p() < 2) throw DataError("selection needs at least 2 covariates");
}

inline StageRecord make_stage(std::size_t stage, std::vector<SubsetCandidate> scored, std::size_t keep,
                              std::size_t generated, const ScoreCache& cache) {
  StageRecord rec;
  rec.stage = stage;
  rec.generated = generated;
  rec.scored = scored.size();
  std::sort(scored.begin(), scored.end(), rank_less);
  scored.resize(std::min(keep, scored.size()));
  rec.best = scored.front();
  rec.ranked = std::move(scored);
  rec.fits_evaluated = cache.fits_evaluated;
  rec.subset_fits = cache.subset_fits;
  return rec;
}

inline void finish(SelectionTrace& trace, const SubsetCandidate& chosen, std::size_t stage, std::string reason,
                   const ScoreCache& cache) {
  trace.final_subset = chosen.indices;
  trace.final_score = chosen.score;
  trace.final_bandwidth = chosen.bandwidth;
  trace.final_stage = stage;
  trace.stop_reason = std::move(reason);
  trace.fits_evaluated = cache.fits_evaluated;
  trace.subset_fits = cache.subset_fits;
}

/// Index of the stage with the best (lowest-ranked) leading candidate.
inline std::size_t best_stage(const std::vector<StageRecord>& stages) {
  std::size_t b = 0;
  for (std::size_t k = 1; k < stages.size(); ++k)
    if (rank_less(stages[k].best, stages[b].best)) b = k;
  return b;
}

/// Applies the gain rule after the newest stage. Returns the stop reason, or
/// nothing to continue. `chosen` receives the stage index to return.
inline std::optional<std::string> stop_check(const std::vector<StageRecord>& stages, const SelectorConfig& cfg,
                                             std::size_t& chosen) {
  const std::size_t last = stages.size() - 1;
  if (cfg.forced_stages > 0) {
    if (stages.size() >= cfg.forced_stages) {
      chosen = best_stage(stages);
      return "forced stage count reached";
    }
    return std::nullopt;
  }
  if (last >= 1) {
    const double gain = relative_gain(stages[last - 1].best.score, stages[last].best.score);
    if (gain <= cfg.threshold) {
      chosen = last - 1;
      return "relative gain below threshold";
    }
  }
  if (stages[last].best.score == 0.0) {
    chosen = last;
    return "perfect fit";
  }
  if (stages.size() >= cfg.max_stages) {
    chosen = best_stage(stages);
    return "maximum stage count reached";
  }
  return std::nullopt;
}

}  // namespace detail

struct MergeResult {
  /// Distinct new unions in generation order.
  std::vector<IndexSet> fresh;
  std::size_t generated = 0;
  std::size_t parent_equal = 0;
  std::size_t cache_hits = 0;
};

/// Pairwise unions J(a) u J(b), a < b, of ranked subsets. Unions equal to a
/// parent, repeats within the batch, and subsets for which `seen` is true
/// are filtered out.
template <class Seen>
MergeResult merge_pairwise(const std::vector<SubsetCandidate>& parents, Seen&& seen) {
  MergeResult out;
  std::unordered_set<IndexSet, IndexSetHash> queued;
  for (std::size_t a = 0; a + 1 < parents.size(); ++a) {
    for (std::size_t b = a + 1; b < parents.size(); ++b) {
      ++out.generated;
      IndexSet u = parents[a].indices.united(parents[b].indices);
      if (u == parents[a].indices || u == parents[b].indices) {
        ++out.parent_equal;
        continue;
      }
      if (seen(u) || queued.contains(u)) {
        ++out.cache_hits;
        continue;
      }
      queued.insert(u);
      out.fresh.push_back(std::move(u));
    }
  }
  return out;
}

/// Sequential subset-merging search.
///
/// Stage 1 ranks all singletons and keeps the best p1 = max(2, floor(sqrt(q))).
/// Each later stage scores the distinct pairwise unions of the sets kept by
/// the previous stage, skipping unions equal to a parent and subsets scored
/// earlier, and keeps the best min(p1, count). The search stops as soon as the
/// relative gain of a stage's best score over the previous stage's best is at
/// most the threshold, returning the previous stage's best subset.
inline SelectionTrace novas_select(const Dataset& data, const SelectorConfig& cfg) {
  detail::check_selectable(data, cfg);
  const std::size_t p = data.p();
  const std::size_t keep = cfg.retained_per_stage(p);
  detail::ScoreCache cache(data, cfg);
  SelectionTrace trace;
  trace.selector = "novas";

  std::vector<IndexSet> singletons;
  singletons.reserve(p);
  for (std::size_t j = 0; j < p; ++j) singletons.push_back(IndexSet::singleton(j));
  trace.stages.push_back(detail::make_stage(1, cache.score(singletons), keep, p, cache));

  while (true) {
    std::size_t chosen = 0;
    if (auto reason = detail::stop_check(trace.stages, cfg, chosen)) {
      detail::finish(trace, trace.stages[chosen].best, chosen + 1, *reason, cache);
      return trace;
    }

    auto merged = merge_pairwise(trace.stages.back().ranked, [&](const IndexSet& u) { return cache.contains(u); });
    trace.cache_hits += merged.cache_hits;
    const std::size_t stage = trace.stages.size() + 1;
    if (merged.fresh.empty()) {
      if (stage == 2) throw EmptyStage("no pairwise unions survived filtering at stage 2");
      const std::size_t b = detail::best_stage(trace.stages);
      detail::finish(trace, trace.stages[b].best, b + 1, "no new subsets", cache);
      return trace;
    }
    auto rec = detail::make_stage(stage, cache.score(merged.fresh), keep, merged.generated, cache);
    rec.parent_equal = merged.parent_equal;
    rec.cache_hits = merged.cache_hits;
    trace.stages.push_back(std::move(rec));
  }
}

/// Greedy forward selection: each step adds the single covariate whose
/// inclusion gives the lowest score, with the same gain-based stopping rule.
inline SelectionTrace mpdp_select(const Dataset& data, const SelectorConfig& cfg) {
  detail::check_selectable(data, cfg);
  const std::size_t p = data.p();
  const std::size_t keep = cfg.retained_per_stage(p);
  detail::ScoreCache cache(data, cfg);
  SelectionTrace trace;
  trace.selector = "mpdp";

  IndexSet current;
  while (true) {
    std::vector<IndexSet> batch;
    for (std::size_t j = 0; j < p; ++j)
      if (!current.contains(j)) batch.push_back(current.with(j));
    const std::size_t stage = trace.stages.size() + 1;
    trace.stages.push_back(detail::make_stage(stage, cache.score(batch), keep, batch.size(), cache));
    current = trace.stages.back().best.indices;

    std::size_t chosen = 0;
    auto reason = detail::stop_check(trace.stages, cfg, chosen);
    if (!reason && current.size() == p) {
      chosen = detail::best_stage(trace.stages);
      reason = "all covariates selected";
    }
    if (reason) {
      detail::finish(trace, trace.stages[chosen].best, chosen + 1, *reason, cache);
      return trace;
    }
  }
}

struct ExhaustiveResult {
  SubsetCandidate best;
  std::size_t subsets_scored = 0;
};

/// Number of nonempty subsets of size <= max_size, saturating at `cap` + 1.
inline std::size_t count_subsets_up_to(std::size_t p, std::size_t max_size, std::size_t cap) {
  std::size_t total = 0;
  double binom = 1.0;
  for (std::size_t k = 1; k <= std::min(p, max_size); ++k) {
    binom = binom * static_cast<double>(p - k + 1) / static_cast<double>(k);
    if (static_cast<double>(total) + binom > static_cast<double>(cap)) return cap + 1;
    total += static_cast<std::size_t>(std::llround(binom));
  }
  return total;
}

/// Scores every subset with at most `max_size` members and returns the
/// minimiser under the same ranking as novas_select.
inline ExhaustiveResult exhaustive_select(const Dataset& data, const SelectorConfig& cfg, std::size_t max_size,
                                          std::size_t max_subsets = 1'000'000) {
  cfg.validate();
  data.validate();
  if (!data.standardized) throw DataError("selection requires a standardized dataset");
  if (max_size < 1) throw ConfigError("max_size must be positive");
  const std::size_t p = data.p();
  const std::size_t total = count_subsets_up_to(p, max_size, max_subsets);
  if (total > max_subsets)
    throw TooManySubsets("more than " + std::to_string(max_subsets) + " subsets of size <= " +
                         std::to_string(max_size) + " among " + std::to_string(p) + " covariates");

  std::vector<IndexSet> all;
  all.reserve(total);
  for (std::size_t k = 1; k <= std::min(p, max_size); ++k) {
    std::vector<std::size_t> comb(k);
    for (std::size_t i = 0; i < k; ++i) comb[i] = i;
    while (true) {
      all.emplace_back(comb);
      std::size_t i = k;
      while (i > 0 && comb[i - 1] == p - k + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t t = i; t < k; ++t) comb[t] = comb[t - 1] + 1;
    }
  }

  detail::ScoreCache cache(data, cfg);
  const auto scored = cache.score(all);
  ExhaustiveResult res;
  res.best = *std::min_element(scored.begin(), scored.end(), rank_less);
  res.subsets_scored = scored.size();
  return res;
}

}  // namespace novas
