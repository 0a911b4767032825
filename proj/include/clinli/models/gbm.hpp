#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "clinli/data/nli.hpp"
#include "clinli/models/features.hpp"
#include "clinli/models/nli_model.hpp"
#include "json.hpp"

namespace clinli::models {

struct GbmConfig {
  std::size_t rounds = 100;
  std::size_t max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 1;
};

GbmConfig gbm_config_from_json(const nlohmann::json& j);
nlohmann::json gbm_config_to_json(const GbmConfig& config);

/// Regression tree in flat form; feature < 0 marks a leaf. Rows with
/// x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  double evaluate(const FeatureVector& x) const;
};

struct GbmModel {
  GbmConfig config;
  std::array<double, data::kNumLabels> init{};  // log class priors
  std::vector<std::array<RegressionTree, data::kNumLabels>> rounds;
  std::vector<double> train_loss;  // multiclass log-loss: initial, then one per round
  std::string feature_hash = feature_manifest_hash();
};

/// Multiclass gradient boosting: per round one tree per class fitted by least
/// squares to y - p, leaves set by a one-step Newton update. Throws ConfigError
/// when fewer than two classes are present, ShapeError on size mismatch.
GbmModel gbm_train(const std::vector<FeatureVector>& features, const std::vector<data::Label>& labels,
                   const GbmConfig& config);

std::array<double, data::kNumLabels> gbm_scores(const GbmModel& model, const FeatureVector& x);
Prediction gbm_predict(const GbmModel& model, const FeatureVector& x);
/// Variable-length entry point; throws ShapeError unless x has kFeatureCount values.
Prediction gbm_predict(const GbmModel& model, const std::vector<double>& x);

nlohmann::json gbm_to_json(const GbmModel& model);
GbmModel gbm_from_json(const nlohmann::json& j);
void save_gbm(const std::filesystem::path& path, const GbmModel& model);
GbmModel load_gbm(const std::filesystem::path& path);

}  // namespace clinli::models
