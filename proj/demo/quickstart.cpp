// Simulates model-1 data, runs both selectors and prints what each picked.
#include <iostream>

#include "novas/selector.hpp"
#include "novas/simulation.hpp"

int main() {
  novas::sim::ModelSpec spec;
  spec.model = novas::sim::Model::m1;
  spec.n = 150;
  spec.p = 40;
  spec.seed = 7;
  const auto data = novas::standardize(novas::sim::generate(spec));

  novas::SelectorConfig cfg;
  cfg.threads = novas::default_thread_count();

  for (const auto& trace : {novas::novas_select(data, cfg), novas::mpdp_select(data, cfg)}) {
    std::cout << trace.selector << ":\n";
    for (const auto& s : trace.stages)
      std::cout << "  stage " << s.stage << "  {" << s.best.indices.to_string() << "}  cv " << s.best.score << '\n';
    std::cout << "  selected {" << trace.final_subset.to_string() << "} after " << trace.subset_fits
              << " subset fits\n";
  }
}
