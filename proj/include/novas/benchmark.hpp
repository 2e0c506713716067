#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "novas/errors.hpp"
#include "novas/selector.hpp"
#include "novas/simulation.hpp"

namespace novas::bench {

struct TimingRow {
  std::size_t p = 0;
  double wall_seconds = 0.0;
  std::size_t fits_evaluated = 0;
  std::size_t subset_fits = 0;
  unsigned threads = 1;
  IndexSet selected;
};

struct BenchmarkResult {
  std::vector<TimingRow> rows;
  /// Least-squares slope of log(wall seconds) against log(p).
  double slope = 0.0;
};

struct BenchmarkOptions {
  std::vector<std::size_t> p_list{100, 500};
  std::size_t n = 100;
  std::size_t stages = 4;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  /// Each p is timed this many times; the fastest run is reported.
  std::size_t repeats = 3;
  double threshold = 0.05;
};

inline double loglog_slope(const std::vector<TimingRow>& rows) {
  const double k = static_cast<double>(rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double lx = std::log(static_cast<double>(r.p));
    const double ly = std::log(r.wall_seconds);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

/// Times novas_select with a fixed number of stages on model-1 data of each size in p_list.
inline BenchmarkResult run_benchmark(const BenchmarkOptions& opt) {
  if (opt.p_list.size() < 2) throw ConfigError("benchmark needs at least two values of p");
  if (opt.stages < 1) throw ConfigError("benchmark needs at least one stage");
  if (opt.repeats < 1) throw ConfigError("benchmark needs at least one repeat");
  BenchmarkResult res;
  for (std::size_t p : opt.p_list) {
    sim::ModelSpec spec;
    spec.n = opt.n;
    spec.p = p;
    spec.seed = opt.seed;
    const Dataset data = standardize(sim::generate(spec));
    SelectorConfig cfg;
    cfg.threshold = opt.threshold;
    cfg.forced_stages = opt.stages;
    cfg.max_stages = std::max(cfg.max_stages, opt.stages);
    cfg.threads = opt.threads;

    TimingRow row;
    row.p = p;
    row.threads = opt.threads;
    row.wall_seconds = INFINITY;
    for (std::size_t r = 0; r < opt.repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto trace = novas_select(data, cfg);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.wall_seconds = std::min(row.wall_seconds, dt);
      row.fits_evaluated = trace.fits_evaluated;
      row.subset_fits = trace.subset_fits;
      row.selected = trace.final_subset;
    }
    res.rows.push_back(row);
  }
  res.slope = loglog_slope(res.rows);
  return res;
}

}  // namespace novas::bench
