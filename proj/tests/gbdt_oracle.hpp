#pragma once

// Reference GBDT for cross-checking the histogram implementation: exact
// greedy splits on raw feature values, logistic loss, Newton leaf values.
// Deliberately independent of include/engage/gbdt.hpp internals.

#include <vector>

namespace oracle {

struct Config {
  double learning_rate = 0.1;
  int max_depth = 2;
  int n_rounds = 5;
  int min_samples_leaf = 1;
};

struct Model;

Model* fit(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
           const Config& cfg);
double predict_proba(const Model* m, const std::vector<double>& x);
void free_model(Model* m);

}  // namespace oracle
