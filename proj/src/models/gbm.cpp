#include "clinli/models/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "clinli/error.hpp"

namespace clinli::models {

using nlohmann::json;

GbmConfig gbm_config_from_json(const json& j) {
  GbmConfig c;
  for (auto& [key, value] : j.items()) {
    if (key == "rounds") c.rounds = value.get<std::size_t>();
    else if (key == "max_depth") c.max_depth = value.get<std::size_t>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "min_samples_leaf") c.min_samples_leaf = value.get<std::size_t>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ConfigError("gbm." + key, "unknown key");
  }
  if (!(c.learning_rate > 0.0)) throw ConfigError("gbm.learning_rate", "must be > 0");
  if (c.min_samples_leaf < 1) throw ConfigError("gbm.min_samples_leaf", "must be >= 1");
  return c;
}

json gbm_config_to_json(const GbmConfig& c) {
  return {{"rounds", c.rounds},
          {"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"min_samples_leaf", c.min_samples_leaf},
          {"seed", c.seed}};
}

double RegressionTree::evaluate(const FeatureVector& x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node]
                                                                                                 : right[node]);
  }
  return value[node];
}

namespace {

constexpr double kMinProb = 1e-12;

std::array<double, data::kNumLabels> softmax3(const std::array<double, data::kNumLabels>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  std::array<double, data::kNumLabels> p{};
  double z = 0;
  for (std::size_t k = 0; k < p.size(); ++k) z += p[k] = std::exp(s[k] - m);
  for (auto& v : p) v /= z;
  return p;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FeatureVector>& x, const std::vector<double>& g, const std::vector<double>& h,
              const GbmConfig& config, double newton_scale)
      : x_(x), g_(g), h_(h), config_(config), scale_(newton_scale) {}

  RegressionTree build() {
    std::vector<std::size_t> rows(x_.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.feature.size());
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    double sg = 0, sh = 0;
    for (auto r : rows) {
      sg += g_[r];
      sh += h_[r];
    }
    tree_.value.push_back(sh < 1e-12 ? 0.0 : scale_ * sg / sh);
    if (depth >= config_.max_depth || rows.size() < 2 * config_.min_samples_leaf) return id;

    const double n = static_cast<double>(rows.size());
    const double base = sg * sg / n;
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = rows;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return x_[a][f] < x_[b][f]; });
      double left_sum = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_sum += g_[sorted[i]];
        const double v = x_[sorted[i]][f], next = x_[sorted[i + 1]][f];
        if (v == next) continue;
        const std::size_t nl = i + 1, nr = sorted.size() - nl;
        if (nl < config_.min_samples_leaf || nr < config_.min_samples_leaf) continue;
        const double right_sum = sg - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - base;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = v + (next - v) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;
    std::vector<std::size_t> lrows, rrows;
    for (auto r : rows) (x_[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows).push_back(r);
    tree_.feature[static_cast<std::size_t>(id)] = best_feature;
    tree_.threshold[static_cast<std::size_t>(id)] = best_threshold;
    const int l = grow(lrows, depth + 1);
    const int r = grow(rrows, depth + 1);
    tree_.left[static_cast<std::size_t>(id)] = l;
    tree_.right[static_cast<std::size_t>(id)] = r;
    return id;
  }

  const std::vector<FeatureVector>& x_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const GbmConfig& config_;
  double scale_;
  RegressionTree tree_;
};

double log_loss(const std::vector<std::array<double, data::kNumLabels>>& scores, const std::vector<std::size_t>& y) {
  double total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) total -= std::log(std::max(softmax3(scores[i])[y[i]], kMinProb));
  return total / static_cast<double>(y.size());
}

}  // namespace

GbmModel gbm_train(const std::vector<FeatureVector>& features, const std::vector<data::Label>& labels,
                   const GbmConfig& config) {
  if (features.size() != labels.size()) throw ShapeError("gbm_train: features and labels differ in length");
  if (!(config.learning_rate > 0.0)) throw ConfigError("gbm.learning_rate", "must be > 0");
  std::array<double, data::kNumLabels> counts{};
  std::vector<std::size_t> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) counts[y[i] = data::label_index(labels[i])] += 1.0;
  if (std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) < 2)
    throw ConfigError("labels", "gradient boosting needs at least two classes in the training data");

  GbmModel model;
  model.config = config;
  const double n = static_cast<double>(labels.size());
  for (std::size_t k = 0; k < counts.size(); ++k) model.init[k] = std::log(std::max(counts[k] / n, kMinProb));
  std::vector<std::array<double, data::kNumLabels>> scores(features.size(), model.init);
  model.train_loss.push_back(log_loss(scores, y));

  const double kk = static_cast<double>(data::kNumLabels);
  std::vector<double> g(features.size()), h(features.size());
  for (std::size_t round = 0; round < config.rounds; ++round) {
    std::vector<std::array<double, data::kNumLabels>> probs(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) probs[i] = softmax3(scores[i]);
    std::array<RegressionTree, data::kNumLabels> trees;
    for (std::size_t k = 0; k < data::kNumLabels; ++k) {
      for (std::size_t i = 0; i < features.size(); ++i) {
        const double p = probs[i][k];
        g[i] = (y[i] == k ? 1.0 : 0.0) - p;
        h[i] = p * (1.0 - p);
      }
      trees[k] = TreeBuilder(features, g, h, config, (kk - 1.0) / kk).build();
    }
    for (std::size_t i = 0; i < features.size(); ++i)
      for (std::size_t k = 0; k < data::kNumLabels; ++k)
        scores[i][k] += config.learning_rate * trees[k].evaluate(features[i]);
    model.rounds.push_back(std::move(trees));
    model.train_loss.push_back(log_loss(scores, y));
  }
  return model;
}

std::array<double, data::kNumLabels> gbm_scores(const GbmModel& model, const FeatureVector& x) {
  auto s = model.init;
  for (const auto& round : model.rounds)
    for (std::size_t k = 0; k < data::kNumLabels; ++k) s[k] += model.config.learning_rate * round[k].evaluate(x);
  return s;
}

Prediction gbm_predict(const GbmModel& model, const FeatureVector& x) {
  Prediction p;
  p.probs = softmax3(gbm_scores(model, x));
  p.label = argmax_label(p.probs);
  return p;
}

Prediction gbm_predict(const GbmModel& model, const std::vector<double>& x) {
  if (x.size() != kFeatureCount) {
    throw ShapeError("feature vector has " + std::to_string(x.size()) + " values, expected " +
                     std::to_string(kFeatureCount));
  }
  FeatureVector f;
  std::copy(x.begin(), x.end(), f.begin());
  return gbm_predict(model, f);
}

json gbm_to_json(const GbmModel& m) {
  json rounds = json::array();
  for (const auto& round : m.rounds) {
    json trees = json::array();
    for (const auto& t : round) {
      trees.push_back({{"feature", t.feature},
                       {"threshold", t.threshold},
                       {"left", t.left},
                       {"right", t.right},
                       {"value", t.value}});
    }
    rounds.push_back(trees);
  }
  return {{"format", "clinli-gbm"},
          {"version", 1},
          {"feature_manifest_hash", m.feature_hash},
          {"feature_names", feature_names()},
          {"config", gbm_config_to_json(m.config)},
          {"init", m.init},
          {"train_loss", m.train_loss},
          {"rounds", rounds}};
}

GbmModel gbm_from_json(const json& j) {
  if (j.value("format", "") != "clinli-gbm") throw ParseError("not a gbm model file", 0);
  GbmModel m;
  m.feature_hash = j.at("feature_manifest_hash").get<std::string>();
  if (m.feature_hash != feature_manifest_hash())
    throw Error("gbm model was trained with a different feature manifest (" + m.feature_hash + ")");
  m.config = gbm_config_from_json(j.at("config"));
  m.init = j.at("init").get<std::array<double, data::kNumLabels>>();
  m.train_loss = j.at("train_loss").get<std::vector<double>>();
  for (const auto& round : j.at("rounds")) {
    std::array<RegressionTree, data::kNumLabels> trees;
    if (round.size() != data::kNumLabels) throw ParseError("gbm round must hold one tree per class", 0);
    for (std::size_t k = 0; k < data::kNumLabels; ++k) {
      auto& t = trees[k];
      const auto& jt = round[k];
      t.feature = jt.at("feature").get<std::vector<int>>();
      t.threshold = jt.at("threshold").get<std::vector<double>>();
      t.left = jt.at("left").get<std::vector<int>>();
      t.right = jt.at("right").get<std::vector<int>>();
      t.value = jt.at("value").get<std::vector<double>>();
      const std::size_t n = t.feature.size();
      if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n || t.value.size() != n)
        throw ParseError("gbm tree arrays differ in length", 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (t.feature[i] < 0) continue;
        if (t.feature[i] >= static_cast<int>(kFeatureCount) || t.left[i] <= static_cast<int>(i) ||
            t.right[i] <= static_cast<int>(i) || t.left[i] >= static_cast<int>(n) || t.right[i] >= static_cast<int>(n))
          throw ParseError("gbm tree references an invalid feature or node", 0);
      }
    }
    m.rounds.push_back(std::move(trees));
  }
  return m;
}

void save_gbm(const std::filesystem::path& path, const GbmModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << gbm_to_json(model).dump() << '\n';
}

GbmModel load_gbm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return gbm_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad gbm model file: ") + e.what(), 0);
  }
}

}  // namespace clinli::models
