// Fits a regression tree and a survival tree on synthetic data and prints
// their cross-validated scores.

#include <iostream>

#include "gradtree/gradtree.hpp"

int main() {
  using namespace gradtree;

  SynthSpec spec;
  spec.kind = SynthKind::friedman1;
  spec.n_samples = 400;
  spec.rng_seed = 7;
  const SynthData synth = generate_synthetic(spec);

  LearnerSpec learner;
  learner.tree.max_depth = 6;
  learner.tree.lambda = 0.5;

  for (const Dataset& data : {synth.regression(), synth.survival()}) {
    double total = 0.0;
    const auto folds = kfold_split(data.size(), 5, 1);
    for (const auto& fold : folds) {
      const Model model = train(data.subset(fold.train), learner);
      total += evaluate(model, data.subset(fold.test)).value;
    }
    std::cout << to_string(data.task) << ": mean test score " << total / static_cast<double>(folds.size()) << '\n';
  }
}
