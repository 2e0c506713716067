#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "novas/selector.hpp"
#include "novas/simulation.hpp"
#include "test_support.hpp"

using namespace novas;

namespace {

Dataset model_data(sim::Model m, std::size_t n, std::size_t p, std::uint64_t seed, bool trap = false) {
  sim::ModelSpec spec;
  spec.model = m;
  spec.n = n;
  spec.p = p;
  spec.seed = seed;
  spec.trap = trap;
  return standardize(sim::generate(spec));
}

std::vector<SubsetCandidate> ranked(std::initializer_list<IndexSet> sets) {
  std::vector<SubsetCandidate> out;
  double s = 1.0;
  for (const auto& set : sets) out.push_back({set, s++, 0.5});
  return out;
}

void check_trace_invariants(const SelectionTrace& t, std::size_t p1, double threshold) {
  REQUIRE(!t.stages.empty());
  for (const auto& st : t.stages) {
    REQUIRE(!st.ranked.empty());
    CHECK(st.ranked.size() <= p1);
    CHECK(std::is_sorted(st.ranked.begin(), st.ranked.end(), rank_less));
    CHECK(st.best.indices == st.ranked.front().indices);
    if (st.stage >= 2) {
      CHECK(st.generated == st.scored + st.parent_equal + st.cache_hits);
      for (const auto& c : st.ranked) {
        CHECK(c.indices.size() >= st.stage);
        CHECK(c.indices.size() <= (std::size_t{1} << (st.stage - 1)));
      }
    }
  }
  for (std::size_t k = 1; k < t.final_stage; ++k) CHECK(t.stages[k].best.score <= t.stages[k - 1].best.score);
  CHECK(t.final_subset == t.stages[t.final_stage - 1].best.indices);
  if (t.stop_reason == "relative gain below threshold") {
    REQUIRE(t.final_stage == t.stages.size() - 1);
    CHECK(relative_gain(t.stages[t.final_stage - 1].best.score, t.stages.back().best.score) <= threshold);
  }
  std::size_t scored = 0;
  for (const auto& st : t.stages) scored += st.scored;
  CHECK(scored == t.subset_fits);
}

}  // namespace

TEST_CASE("retention count is max(2, floor(sqrt(q))) capped at p", "[selector]") {
  SelectorConfig cfg;
  cfg.budget_q = 10000;
  CHECK(cfg.retained_per_stage(20000) == 100);
  CHECK(cfg.retained_per_stage(50) == 50);
  cfg.budget_q = 99;
  CHECK(cfg.retained_per_stage(1000) == 9);
  cfg.budget_q.reset();
  CHECK(cfg.retained_per_stage(100) == 10);
  CHECK(cfg.retained_per_stage(3) == 2);
  cfg.budget_q = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.budget_q.reset();
  cfg.threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("stage 2 merges the retained singletons into p1(p1-1)/2 pairs", "[selector]") {
  const auto data = model_data(sim::Model::m1, 30, 100, 3);
  SelectorConfig cfg;
  cfg.budget_q = 10000;
  cfg.max_stages = 2;
  cfg.grid = BandwidthGrid({1.0});
  const auto t = novas_select(data, cfg);
  REQUIRE(t.stages.size() == 2);
  CHECK(t.stages[0].ranked.size() == 100);
  CHECK(t.stages[1].generated == 4950);
  CHECK(t.stages[1].scored == 4950);
  CHECK(t.stages[1].ranked.size() == 100);
}

TEST_CASE("stage 3 unions of overlapping pairs have size 3 or 4", "[selector]") {
  // j1..j4 = 1, 2, 3, 4 (zero-based 0..3)
  const auto merged = merge_pairwise(ranked({IndexSet{0, 1}, IndexSet{0, 2}, IndexSet{1, 3}}),
                                     [](const IndexSet&) { return false; });
  REQUIRE(merged.fresh.size() == 3);
  CHECK(merged.fresh[0] == IndexSet{0, 1, 2});
  CHECK(merged.fresh[1] == IndexSet{0, 1, 3});
  CHECK(merged.fresh[2] == IndexSet{0, 1, 2, 3});
  CHECK(merged.generated == 3);
}

TEST_CASE("merging filters parent-equal, repeated and previously scored unions", "[selector]") {
  const auto merged = merge_pairwise(ranked({IndexSet{0, 1, 2}, IndexSet{1, 2}, IndexSet{0, 3}, IndexSet{1, 2, 3}}),
                                     [](const IndexSet& s) { return s == IndexSet{0, 1, 2, 3}; });
  // {012}u{12} = parent; {012}u{03} = {0123} seen; {012}u{123} = {0123} seen;
  // {12}u{03} = {0123} seen; {12}u{123} = parent; {03}u{123} = {0123} seen
  CHECK(merged.generated == 6);
  CHECK(merged.parent_equal == 2);
  CHECK(merged.cache_hits == 4);
  CHECK(merged.fresh.empty());
}

TEST_CASE("novas recovers the model-1 active set", "[selector][slow]") {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = model_data(sim::Model::m1, 200, 20, seed);
    SelectorConfig cfg;
    const auto t = novas_select(data, cfg);
    check_trace_invariants(t, cfg.retained_per_stage(20), cfg.threshold);
    hits += t.final_subset == IndexSet{0, 1, 2};
  }
  CHECK(hits >= 9);
}

TEST_CASE("returned score is the criterion of the returned subset at its bandwidth", "[selector]") {
  const auto data = model_data(sim::Model::m2, 80, 12, 5);
  const auto t = novas_select(data, SelectorConfig{});
  CHECK(cv_score(data, t.final_subset, t.final_bandwidth) == t.final_score);
}

TEST_CASE("novas may drop a variable that an earlier stage found best", "[selector]") {
  // The redundant last column pairs well with column 3 but is discarded once
  // {1, 2, 3} is formed.
  const auto data = model_data(sim::Model::m4, 200, 50, 100, true);
  const auto t = novas_select(data, SelectorConfig{});
  REQUIRE(t.stages.size() >= 3);
  CHECK(t.stages[1].best.indices == IndexSet{2, 49});
  CHECK(t.stages[2].best.indices == IndexSet{0, 1, 2});
  CHECK_FALSE(t.stages[2].best.indices.contains(49));
}

TEST_CASE("selection is identical for any worker count", "[selector][determinism]") {
  const auto data = model_data(sim::Model::m3, 90, 40, 11);
  SelectorConfig one;
  const auto ref = novas_select(data, one);
  for (unsigned threads : {2u, 8u}) {
    SelectorConfig many;
    many.threads = threads;
    const auto t = novas_select(data, many);
    REQUIRE(t.stages.size() == ref.stages.size());
    for (std::size_t k = 0; k < t.stages.size(); ++k) {
      REQUIRE(t.stages[k].ranked.size() == ref.stages[k].ranked.size());
      for (std::size_t c = 0; c < t.stages[k].ranked.size(); ++c) {
        CHECK(t.stages[k].ranked[c].indices == ref.stages[k].ranked[c].indices);
        CHECK(t.stages[k].ranked[c].score == ref.stages[k].ranked[c].score);
        CHECK(t.stages[k].ranked[c].bandwidth == ref.stages[k].ranked[c].bandwidth);
      }
    }
    CHECK(t.fits_evaluated == ref.fits_evaluated);
    const auto m = mpdp_select(data, many);
    const auto mref = mpdp_select(data, one);
    CHECK(m.final_subset == mref.final_subset);
    CHECK(m.final_score == mref.final_score);
  }
}

TEST_CASE("permuting covariate columns relabels the selection", "[selector][property]") {
  for (std::uint64_t seed = 21; seed <= 23; ++seed) {
    const auto data = model_data(sim::Model::m1, 120, 15, seed);
    std::vector<std::size_t> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(seed));
    Dataset moved = data;
    for (std::size_t j = 0; j < 15; ++j) moved.x.col(static_cast<Eigen::Index>(perm[j])) = data.x.col(static_cast<Eigen::Index>(j));
    const auto a = novas_select(data, SelectorConfig{});
    const auto b = novas_select(moved, SelectorConfig{});
    CHECK(b.final_subset == a.final_subset.mapped(perm));
    CHECK(std::abs(b.final_score - a.final_score) <= 1e-12 * a.final_score);
  }
}

TEST_CASE("mpdp adds one covariate per step and counts kp - k(k-1)/2 fits", "[selector][mpdp]") {
  const auto data = model_data(sim::Model::m1, 60, 12, 8);
  SelectorConfig cfg;
  cfg.max_stages = 1;
  const auto first = mpdp_select(data, cfg);
  CHECK(first.subset_fits == 12);
  CHECK(first.stages.size() == 1);

  for (std::size_t k = 2; k <= 5; ++k) {
    SelectorConfig forced;
    forced.forced_stages = k;
    const auto t = mpdp_select(data, forced);
    REQUIRE(t.stages.size() == k);
    CHECK(t.subset_fits == k * 12 - k * (k - 1) / 2);
    for (std::size_t s = 1; s < k; ++s) {
      CHECK(t.stages[s].best.indices.size() == t.stages[s - 1].best.indices.size() + 1);
      CHECK(t.stages[s].best.indices.includes(t.stages[s - 1].best.indices));
    }
  }

  const auto free_run = mpdp_select(data, SelectorConfig{});
  const std::size_t k = free_run.stages.size();
  CHECK(free_run.subset_fits == k * 12 - k * (k - 1) / 2);
}

TEST_CASE("mpdp's first pick on trap data is column 3 or the trap column", "[selector][mpdp]") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto data = model_data(sim::Model::m4, 200, 50, seed, true);
    SelectorConfig cfg;
    cfg.max_stages = 1;
    const auto t = mpdp_select(data, cfg);
    const auto pick = t.stages[0].best.indices;
    CHECK((pick == IndexSet{2} || pick == IndexSet{49}));
  }
}

TEST_CASE("exhaustive search scores every small subset", "[selector][exhaustive]") {
  Eigen::MatrixXd x = testing_support::uniform_matrix(60, 3, 2);
  Eigen::VectorXd y = x.col(1);
  const auto data = standardize(Dataset(x, y));
  const auto all = exhaustive_select(data, SelectorConfig{}, 3);
  CHECK(all.subsets_scored == 7);
  const auto single = exhaustive_select(data, SelectorConfig{}, 1);
  CHECK(single.subsets_scored == 3);
  CHECK(single.best.indices == IndexSet{1});
  CHECK(single.best.score < 1e-10);

  CHECK(count_subsets_up_to(30, 30, 1'000'000) > 1'000'000);
  CHECK(count_subsets_up_to(10, 2, 1'000'000) == 55);
  const auto wide = model_data(sim::Model::m1, 20, 40, 1);
  CHECK_THROWS_AS(exhaustive_select(wide, SelectorConfig{}, 6), TooManySubsets);
}

TEST_CASE("exhaustive search and novas agree on a small model-1 problem", "[selector][exhaustive][slow]") {
  const auto data = model_data(sim::Model::m1, 300, 6, 4);
  const auto ex = exhaustive_select(data, SelectorConfig{}, 3);
  CHECK(ex.subsets_scored == 41);
  CHECK(ex.best.indices == IndexSet{0, 1, 2});
  SelectorConfig cfg;
  cfg.budget_q = 36;
  CHECK(novas_select(data, cfg).final_subset == ex.best.indices);
  // the default budget keeps two singletons, so no triple can form
  const auto narrow = novas_select(data, SelectorConfig{});
  CHECK(narrow.stop_reason == "no new subsets");
  CHECK(narrow.final_subset.size() <= 2);
}

TEST_CASE("selectors reject unusable input", "[selector][errors]") {
  Eigen::MatrixXd x = testing_support::uniform_matrix(30, 1, 1);
  const auto one_col = standardize(Dataset(x, x.col(0)));
  CHECK_THROWS_AS(novas_select(one_col, SelectorConfig{}), DataError);
  const auto raw = sim::generate(sim::ModelSpec{});
  CHECK_THROWS_AS(novas_select(raw, SelectorConfig{}), DataError);
  CHECK_THROWS_AS(mpdp_select(raw, SelectorConfig{}), DataError);
}
