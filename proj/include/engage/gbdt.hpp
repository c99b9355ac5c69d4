#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engage/errors.hpp"
#include "engage/features.hpp"

namespace engage {
namespace gbdt {

struct TrainConfig {
  double learning_rate = 0.1;
  int max_depth = 7;
  int n_iterations = 100;
  int min_samples_leaf = 8;
  int n_bins = 64;
  uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (n_iterations < 1) throw ConfigError("n_iterations must be >= 1");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (n_bins < 2 || n_bins > 256) throw ConfigError("n_bins must be in [2,256]");
  }
};

struct LabeledSet {
  std::vector<std::vector<double>> x;
  std::vector<int> y;  // 0 = resting, 1 = gaze preamble

  void add(const FeatureVector& fv, int label) {
    x.emplace_back(fv.values.begin(), fv.values.end());
    y.push_back(label);
  }
  size_t size() const { return x.size(); }
};

struct TreeNode {
  int feature = -1;        // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf value, already scaled by learning rate
};

struct Tree {
  std::vector<TreeNode> nodes;

  double score(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

struct GbdtModel {
  std::vector<Tree> trees;
  std::vector<std::vector<double>> bin_edges;  // per-feature cut points, strictly increasing
  double base_score = 0.0;                     // log-odds prior
  int n_features = 0;
  TrainConfig config;
  std::vector<std::string> warnings;

  double raw_score(const std::vector<double>& x) const {
    double s = base_score;
    for (const auto& t : trees) s += t.score(x);
    return s;
  }
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.0;
  // [[TN, FP], [FN, TP]]
  std::array<std::array<long, 2>, 2> confusion{{{0, 0}, {0, 0}}};
};

constexpr double kHessianLambda = 1e-6;
constexpr double kDefaultThreshold = 0.5;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

// Quantile cut points placed midway between adjacent distinct values so bin
// membership depends only on rank order.
inline std::vector<double> compute_cuts(std::vector<double> col, int n_bins) {
  std::sort(col.begin(), col.end());
  col.erase(std::unique(col.begin(), col.end()), col.end());
  std::vector<double> cuts;
  const int n = static_cast<int>(col.size());
  if (n <= 1) return cuts;
  if (n <= n_bins) {
    for (int i = 0; i + 1 < n; ++i) cuts.push_back(0.5 * (col[i] + col[i + 1]));
    return cuts;
  }
  for (int k = 1; k < n_bins; ++k) {
    int pos = static_cast<int>(static_cast<long long>(k) * n / n_bins);
    if (pos <= 0 || pos >= n) continue;
    double cut = 0.5 * (col[pos - 1] + col[pos]);
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }
  return cuts;
}

inline int bin_of(double x, const std::vector<double>& cuts) {
  // number of cuts strictly below x
  return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

struct Histogram {
  std::vector<double> g, h;
  std::vector<long> count;
  void reset(int bins) {
    g.assign(bins, 0.0);
    h.assign(bins, 0.0);
    count.assign(bins, 0);
  }
};

struct SplitResult {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;  // split after this bin index
};

struct TreeBuilder {
  const std::vector<std::vector<uint8_t>>& binned;  // [feature][row]
  const std::vector<std::vector<double>>& cuts;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const TrainConfig& cfg;
  Tree tree;

  int build(std::vector<int>&& rows, int depth) {
    double G = 0.0, H = 0.0;
    for (int r : rows) {
      G += grad[r];
      H += hess[r];
    }
    SplitResult best;
    if (depth < cfg.max_depth &&
        static_cast<int>(rows.size()) >= 2 * cfg.min_samples_leaf) {
      best = find_split(rows, G, H);
    }
    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best.feature < 0) {
      tree.nodes[node_id].value = cfg.learning_rate * (-G / (H + kHessianLambda));
      return node_id;
    }
    std::vector<int> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int r : rows) {
      if (binned[best.feature][r] <= best.bin)
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = cuts[best.feature][best.bin];
    int l = build(std::move(left_rows), depth + 1);
    int r = build(std::move(right_rows), depth + 1);
    tree.nodes[node_id].left = l;
    tree.nodes[node_id].right = r;
    return node_id;
  }

  SplitResult find_split(const std::vector<int>& rows, double G, double H) const {
    SplitResult best;
    double parent_obj = G * G / (H + kHessianLambda);
    Histogram hist;
    const int n_features = static_cast<int>(binned.size());
    for (int f = 0; f < n_features; ++f) {
      const int n_cuts = static_cast<int>(cuts[f].size());
      if (n_cuts == 0) continue;
      hist.reset(n_cuts + 1);
      for (int r : rows) {
        int b = binned[f][r];
        hist.g[b] += grad[r];
        hist.h[b] += hess[r];
        hist.count[b] += 1;
      }
      double GL = 0.0, HL = 0.0;
      long CL = 0;
      const long total = static_cast<long>(rows.size());
      for (int b = 0; b < n_cuts; ++b) {
        GL += hist.g[b];
        HL += hist.h[b];
        CL += hist.count[b];
        if (CL < cfg.min_samples_leaf || total - CL < cfg.min_samples_leaf) continue;
        double GR = G - GL, HR = H - HL;
        double gain = GL * GL / (HL + kHessianLambda) + GR * GR / (HR + kHessianLambda) -
                      parent_obj;
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = f;
          best.bin = b;
        }
      }
    }
    return best;
  }
};

}  // namespace detail

// Logistic-loss boosting with quantile-binned histogram splits and Newton
// leaf values. Deterministic for fixed input order.
inline GbdtModel fit(const LabeledSet& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw InsufficientDataError("empty training set");
  const int n = static_cast<int>(data.size());
  const int n_features = static_cast<int>(data.x[0].size());
  for (const auto& row : data.x)
    if (static_cast<int>(row.size()) != n_features)
      throw DimensionMismatchError("ragged feature rows");

  long positives = std::count(data.y.begin(), data.y.end(), 1);
  if (positives == 0 || positives == n)
    throw SingleClassDataError("training data contains a single class");

  GbdtModel model;
  model.config = config;
  model.n_features = n_features;
  double p0 = static_cast<double>(positives) / n;
  model.base_score = std::log(p0 / (1.0 - p0));

  model.bin_edges.resize(n_features);
  std::vector<std::vector<uint8_t>> binned(n_features, std::vector<uint8_t>(n));
  for (int f = 0; f < n_features; ++f) {
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = data.x[i][f];
    model.bin_edges[f] = detail::compute_cuts(col, config.n_bins);
    if (model.bin_edges[f].empty())
      model.warnings.push_back("degenerate feature (constant column): index " +
                               std::to_string(f));
    for (int i = 0; i < n; ++i)
      binned[f][i] = static_cast<uint8_t>(detail::bin_of(col[i], model.bin_edges[f]));
  }

  std::vector<double> raw(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  for (int round = 0; round < config.n_iterations; ++round) {
    for (int i = 0; i < n; ++i) {
      double p = sigmoid(raw[i]);
      grad[i] = p - data.y[i];
      hess[i] = std::max(p * (1.0 - p), 1e-12);
    }
    detail::TreeBuilder builder{binned, model.bin_edges, grad, hess, config, {}};
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    builder.build(std::move(all), 0);
    for (int i = 0; i < n; ++i) raw[i] += builder.tree.score(data.x[i]);
    model.trees.push_back(std::move(builder.tree));
  }
  return model;
}

inline double predict_proba(const GbdtModel& model, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != model.n_features)
    throw DimensionMismatchError("expected " + std::to_string(model.n_features) +
                                 " features, got " + std::to_string(x.size()));
  return sigmoid(model.raw_score(x));
}

inline double predict_proba(const GbdtModel& model, const FeatureVector& fv) {
  return predict_proba(model, std::vector<double>(fv.values.begin(), fv.values.end()));
}

inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  // Mann-Whitney rank statistic with tie correction.
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double r = 0.5 * (i + j - 1) + 1.0;  // average 1-based rank
    for (int k = i; k < j; ++k) rank[order[k]] = r;
    i = j;
  }
  double rank_sum_pos = 0.0;
  long n_pos = 0;
  for (int k = 0; k < n; ++k) {
    if (labels[k] == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  }
  long n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (static_cast<double>(n_pos) * n_neg);
}

inline Metrics evaluate(const GbdtModel& model, const LabeledSet& data,
                        double threshold = kDefaultThreshold) {
  if (data.size() == 0) throw InsufficientDataError("empty evaluation set");
  Metrics m;
  std::vector<double> scores(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    scores[i] = predict_proba(model, data.x[i]);
    int pred = scores[i] >= threshold ? 1 : 0;
    m.confusion[data.y[i]][pred] += 1;
  }
  long tn = m.confusion[0][0], fp = m.confusion[0][1];
  long fn = m.confusion[1][0], tp = m.confusion[1][1];
  long total = tn + fp + fn + tp;
  m.accuracy = static_cast<double>(tn + tp) / total;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.roc_auc = roc_auc(scores, data.y);
  return m;
}

struct CvResult {
  TrainConfig best;
  std::vector<std::vector<double>> fold_f1;  // [config][fold]
  std::vector<double> mean_f1;               // per config
};

// Stratified k-fold grid search selecting by mean F1; ties broken by smaller
// n_iterations, then smaller max_depth.
inline CvResult cross_validate(const LabeledSet& data, const std::vector<TrainConfig>& grid,
                               int k, uint64_t seed = 0) {
  if (k < 2) throw ConfigError("cross_validate requires k >= 2");
  if (data.size() < static_cast<size_t>(k))
    throw InsufficientDataError("fewer rows than folds");
  if (grid.empty()) throw ConfigError("empty hyperparameter grid");

  const int n = static_cast<int>(data.size());
  std::vector<int> pos_idx, neg_idx;
  for (int i = 0; i < n; ++i) (data.y[i] == 1 ? pos_idx : neg_idx).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(pos_idx.begin(), pos_idx.end(), rng);
  std::shuffle(neg_idx.begin(), neg_idx.end(), rng);
  std::vector<int> fold_of(n);
  int f = 0;
  for (int i : pos_idx) fold_of[i] = f++ % k;
  for (int i : neg_idx) fold_of[i] = f++ % k;

  CvResult result;
  result.fold_f1.assign(grid.size(), std::vector<double>(k, 0.0));
  result.mean_f1.assign(grid.size(), 0.0);
  for (size_t c = 0; c < grid.size(); ++c) {
    for (int fold = 0; fold < k; ++fold) {
      LabeledSet train, test;
      for (int i = 0; i < n; ++i) {
        auto& dst = fold_of[i] == fold ? test : train;
        dst.x.push_back(data.x[i]);
        dst.y.push_back(data.y[i]);
      }
      double f1 = 0.0;
      try {
        GbdtModel model = fit(train, grid[c]);
        f1 = evaluate(model, test).f1;
      } catch (const SingleClassDataError&) {
        f1 = 0.0;  // unlucky fold on tiny data
      }
      result.fold_f1[c][fold] = f1;
      result.mean_f1[c] += f1 / k;
    }
  }
  size_t best = 0;
  for (size_t c = 1; c < grid.size(); ++c) {
    double d = result.mean_f1[c] - result.mean_f1[best];
    if (d > 1e-12) {
      best = c;
    } else if (std::abs(d) <= 1e-12) {
      const auto& a = grid[c];
      const auto& b = grid[best];
      if (a.n_iterations < b.n_iterations ||
          (a.n_iterations == b.n_iterations && a.max_depth < b.max_depth))
        best = c;
    }
  }
  result.best = grid[best];
  return result;
}

// Feature file: newline-delimited {"x":[...], "y":0|1} rows.
inline void save_labeled_set(const LabeledSet& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write feature file: " + path);
  for (size_t i = 0; i < data.size(); ++i)
    out << nlohmann::json{{"x", data.x[i]}, {"y", data.y[i]}}.dump() << "\n";
}

inline LabeledSet load_labeled_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open feature file: " + path);
  LabeledSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      set.x.push_back(j.at("x").get<std::vector<double>>());
      set.y.push_back(j.at("y").get<int>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return set;
}

constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"max_depth", c.max_depth},
          {"n_iterations", c.n_iterations},   {"min_samples_leaf", c.min_samples_leaf},
          {"n_bins", c.n_bins},               {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.n_bins = j.value("n_bins", c.n_bins);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline void save_model(const GbdtModel& model, const std::string& path) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value}});
    trees.push_back({{"nodes", nodes}});
  }
  nlohmann::json j{{"v", kModelFormatVersion},
                   {"kind", "gbdt-binary-logistic"},
                   {"n_features", model.n_features},
                   {"base_score", model.base_score},
                   {"config", to_json(model.config)},
                   {"bin_edges", model.bin_edges},
                   {"trees", trees}};
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file: " + path);
  out << j.dump(2) << "\n";
}

inline GbdtModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (j.value("v", 0) != kModelFormatVersion) throw SchemaError("unsupported model version");
  GbdtModel model;
  model.n_features = j.at("n_features").get<int>();
  model.base_score = j.at("base_score").get<double>();
  model.config = train_config_from_json(j.at("config"));
  model.bin_edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.value = nj.at("value").get<double>();
      t.nodes.push_back(n);
    }
    model.trees.push_back(std::move(t));
  }
  return model;
}

}  // namespace gbdt
}  // namespace engage
