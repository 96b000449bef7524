// Simulate missions, fit a tree, explain a state and ask a what-if question.

#include <iostream>

#include "sxai/sxai.hpp"

int main() {
  using namespace sxai;

  const auto data = to_dataset(simulate(preset("paper-scale", 42)));
  const auto model = build_model_file(data, TreeParams{8, 15});
  std::cout << "trained on " << data.size() << " rows\n";

  const VehicleState state{true, Objective::waypoint, Progress::transiting, true, false};
  const auto e = explain_state(model, state, {});
  std::cout << e.sentence << '\n';
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    std::cout << "  " << kFeatureNames[f] << " " << e.attribution.phi[f] << '\n';

  const auto r = counterfactual(*model.model, state, {{"obstacle_found", "true"}}, Background{model.background});
  std::cout << realise_counterfactual(r) << '\n';
}
