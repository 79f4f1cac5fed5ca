// Small end-to-end run: sine versus spectrally matched noise, one subject.

#include <cstdio>

#include "topoeeg/pipeline/experiment.hpp"

int main() {
  using namespace topoeeg;
  ExperimentConfig c;
  c.seed = 11;
  c.dataset.trials = 30;
  c.classifier.forest.trees = 50;
  const auto r = run_experiment(c);
  std::fputs(r.tables_text.c_str(), stdout);
}
