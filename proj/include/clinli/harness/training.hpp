#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clinli/autodiff/adam.hpp"
#include "clinli/data/nli.hpp"
#include "clinli/harness/metrics.hpp"
#include "clinli/models/nli_model.hpp"
#include "clinli/ontology/graph.hpp"

namespace clinli::harness {

/// Tracks the best validation loss. An epoch improves only when its loss is
/// strictly below the best so far. Epochs are numbered from 1.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  /// Returns true when training should stop after this epoch.
  bool update(double val_loss);
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  std::size_t epochs_seen() const { return epoch_; }
  bool improved_last() const { return improved_last_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_loss_ = 0.0;
  bool improved_last_ = false;
};

struct TrainConfig {
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  ad::AdamConfig adam{};
  std::uint64_t seed = 1;
  std::string head = "main";
  /// Parameters updated by the optimizer; all trainable ones when empty.
  ad::Adam::Filter trainable;
  /// Required for knowledge-directed models.
  const onto::ConceptGraph* graph = nullptr;
  /// Replaces the dev loss of epoch k with scripted[k-1] (protocol testing).
  std::vector<double> scripted_val_loss;
};

void validate(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

/// Adam training with shuffled minibatches and early stopping on the dev
/// loss; the parameters of the best epoch are restored before returning.
/// Throws NumericError naming the epoch and batch when a loss is not finite.
/// `optimizer` carries moment estimates across calls when supplied.
TrainHistory train_model(models::NliModel& model, const std::vector<data::NliPair>& train,
                         const std::vector<data::NliPair>& dev, const TrainConfig& config,
                         ad::Adam* optimizer = nullptr);

/// Mean cross-entropy over `pairs` (no dropout).
double mean_loss(const models::NliModel& model, const std::vector<data::NliPair>& pairs, const std::string& head,
                 const onto::ConceptGraph* graph, std::size_t batch_size = 64);

std::vector<models::Prediction> predict_pairs(const models::NliModel& model, const std::vector<data::NliPair>& pairs,
                                              const std::string& head, const onto::ConceptGraph* graph,
                                              std::size_t batch_size = 64);

Metrics evaluate(const models::NliModel& model, const std::vector<data::NliPair>& pairs,
                 const std::string& head = "main", const onto::ConceptGraph* graph = nullptr,
                 std::size_t batch_size = 64);

data::Vocabulary vocabulary_for(std::initializer_list<const std::vector<data::NliPair>*> splits);

struct RunResult {
  std::string experiment;
  std::string model;
  std::string transfer_mode = "none";
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;          // last training phase
  std::vector<EpochRecord> source_epochs;   // pre-training phase of transfer runs
  std::size_t best_epoch = 0;
  Metrics dev;
  Metrics test;
  double wall_time_seconds = 0.0;
  std::string checkpoint;
};

/// Wall time is left out unless requested so that reruns compare byte-equal.
nlohmann::json run_result_to_json(const RunResult& r, bool include_wall_time = false);
RunResult run_result_from_json(const nlohmann::json& j);

std::filesystem::path checkpoint_path(const std::filesystem::path& root, const std::string& experiment,
                                      std::uint64_t seed);

/// Replaces every premise with the single reserved token.
inline constexpr const char* kPremisePlaceholder = "\xE2\x88\x85premise";
std::vector<data::NliPair> hypothesis_only(const std::vector<data::NliPair>& pairs);

}  // namespace clinli::harness
