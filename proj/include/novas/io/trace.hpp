#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "novas/errors.hpp"
#include "novas/selector.hpp"

namespace novas::io {

using nlohmann::json;

// Trace files hold one JSON object per line:
//   {"type":"header", ...}   covariate names and dimensions
//   {"type":"stage", ...}    one per computed stage, in order
//   {"type":"final", ...}    the returned subset and counters
// Subset indices are 1-based covariate positions.

struct TraceHeader {
  std::string selector;
  std::string response;
  std::vector<std::string> covariates;
  std::size_t n = 0;
  std::size_t p = 0;
};

namespace detail {

inline json subset_json(const IndexSet& s) {
  json a = json::array();
  for (auto j : s) a.push_back(j + 1);
  return a;
}

inline IndexSet subset_from(const json& a) {
  std::vector<std::size_t> v;
  for (const auto& e : a) {
    const auto j = e.get<std::size_t>();
    if (j == 0) throw DataError("trace subset indices are 1-based");
    v.push_back(j - 1);
  }
  return IndexSet(std::move(v));
}

inline json candidate_json(const SubsetCandidate& c) {
  return {{"subset", subset_json(c.indices)}, {"score", c.score}, {"bandwidth", c.bandwidth}};
}

inline SubsetCandidate candidate_from(const json& j) {
  return {subset_from(j.at("subset")), j.at("score").get<double>(), j.at("bandwidth").get<double>()};
}

}  // namespace detail

inline json header_record(const TraceHeader& h) {
  return {{"type", "header"}, {"selector", h.selector}, {"response", h.response},
          {"covariates", h.covariates}, {"n", h.n}, {"p", h.p}};
}

inline json stage_record(const std::string& selector, const StageRecord& s) {
  json cands = json::array();
  for (const auto& c : s.ranked) cands.push_back(detail::candidate_json(c));
  return {{"type", "stage"},
          {"selector", selector},
          {"stage", s.stage},
          {"candidates", std::move(cands)},
          {"best", detail::candidate_json(s.best)},
          {"generated", s.generated},
          {"scored", s.scored},
          {"fits_evaluated", s.fits_evaluated},
          {"subset_fits", s.subset_fits}};
}

inline json final_record(const SelectionTrace& t) {
  return {{"type", "final"},
          {"selector", t.selector},
          {"stage", t.final_stage},
          {"subset", detail::subset_json(t.final_subset)},
          {"score", t.final_score},
          {"bandwidth", t.final_bandwidth},
          {"fits_evaluated", t.fits_evaluated},
          {"subset_fits", t.subset_fits},
          {"cache_hits", t.cache_hits},
          {"stop_reason", t.stop_reason}};
}

inline void write_trace(std::ostream& out, const TraceHeader& header, const SelectionTrace& trace) {
  out << header_record(header).dump() << '\n';
  for (const auto& s : trace.stages) out << stage_record(trace.selector, s).dump() << '\n';
  out << final_record(trace).dump() << '\n';
}

struct LoadedTrace {
  TraceHeader header;
  SelectionTrace trace;
};

inline LoadedTrace read_trace(std::istream& in) {
  LoadedTrace lt;
  bool have_final = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      const auto type = rec.at("type").get<std::string>();
      if (type == "header") {
        lt.header.selector = rec.at("selector").get<std::string>();
        lt.header.response = rec.at("response").get<std::string>();
        lt.header.covariates = rec.at("covariates").get<std::vector<std::string>>();
        lt.header.n = rec.at("n").get<std::size_t>();
        lt.header.p = rec.at("p").get<std::size_t>();
      } else if (type == "stage") {
        StageRecord s;
        s.stage = rec.at("stage").get<std::size_t>();
        for (const auto& c : rec.at("candidates")) s.ranked.push_back(detail::candidate_from(c));
        s.best = detail::candidate_from(rec.at("best"));
        s.generated = rec.at("generated").get<std::size_t>();
        s.scored = rec.at("scored").get<std::size_t>();
        s.fits_evaluated = rec.at("fits_evaluated").get<std::size_t>();
        s.subset_fits = rec.at("subset_fits").get<std::size_t>();
        lt.trace.selector = rec.at("selector").get<std::string>();
        lt.trace.stages.push_back(std::move(s));
      } else if (type == "final") {
        auto& t = lt.trace;
        t.selector = rec.at("selector").get<std::string>();
        t.final_stage = rec.at("stage").get<std::size_t>();
        t.final_subset = detail::subset_from(rec.at("subset"));
        t.final_score = rec.at("score").get<double>();
        t.final_bandwidth = rec.at("bandwidth").get<double>();
        t.fits_evaluated = rec.at("fits_evaluated").get<std::size_t>();
        t.subset_fits = rec.at("subset_fits").get<std::size_t>();
        t.cache_hits = rec.at("cache_hits").get<std::size_t>();
        t.stop_reason = rec.at("stop_reason").get<std::string>();
        have_final = true;
      } else {
        throw DataError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw DataError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_final) throw DataError("trace has no final record");
  return lt;
}

namespace detail {

inline std::string fmt_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string names_of(const IndexSet& s, const std::vector<std::string>& names) {
  std::string out;
  for (auto j : s) {
    if (!out.empty()) out += ' ';
    out += j < names.size() ? names[j] : std::to_string(j + 1);
  }
  return out;
}

}  // namespace detail

/// Stage-by-stage table of best subsets and their criterion, then the final choice.
inline std::string format_summary(const SelectionTrace& t, const std::vector<std::string>& names = {}) {
  std::size_t width = 18;
  for (const auto& s : t.stages) width = std::max(width, s.best.indices.to_string().size() + 2);
  std::ostringstream os;
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  os << pad("Stage", 7) << pad("Selected variables", width) << "CV\n";
  for (const auto& s : t.stages)
    os << pad(std::to_string(s.stage), 7) << pad(s.best.indices.to_string(), width)
       << detail::fmt_score(s.best.score) << '\n';
  os << "Fits: " << t.subset_fits << " subsets, " << t.fits_evaluated << " bandwidth evaluations ("
     << t.stop_reason << ")\n";
  os << "Final (" << t.selector << ", stage " << t.final_stage << "): {" << t.final_subset.to_string() << "}";
  if (!names.empty()) os << " [" << detail::names_of(t.final_subset, names) << "]";
  os << " cv " << detail::fmt_score(t.final_score) << '\n';
  return os.str();
}

}  // namespace novas::io
