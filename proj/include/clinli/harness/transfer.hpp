#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clinli/data/nli.hpp"
#include "clinli/embeddings/embedding_matrix.hpp"
#include "clinli/harness/training.hpp"
#include "clinli/models/nli_model.hpp"

namespace clinli::harness {

enum class TransferMode { none, direct, sequential, multi_target };
std::string_view transfer_mode_name(TransferMode mode);
TransferMode parse_transfer_mode(std::string_view name);

/// Parameter partition for multi-target training: shared trunk, source head
/// and target head. Exhaustive and disjoint over the model's parameters.
struct TransferPlan {
  std::string source_head = "source";
  std::string target_head = "target";
  std::vector<std::string> shared;
  std::vector<std::string> source;
  std::vector<std::string> target;

  bool in_shared(std::string_view name) const;
  bool in_source(std::string_view name) const;
  bool in_target(std::string_view name) const;
};

/// Everything under "head.<source_head>." and "head.<target_head>." goes to
/// the heads, the rest is shared. Throws Error when a head is missing or a
/// parameter belongs to another head.
TransferPlan make_transfer_plan(const models::NliModel& model, const std::string& source_head = "source",
                                const std::string& target_head = "target");
/// Throws Error unless the plan partitions the model's parameters.
void check_plan(const TransferPlan& plan, const models::NliModel& model);

struct TransferOptions {
  TransferMode mode = TransferMode::none;
  models::ModelSpec spec;
  TrainConfig train;
  /// Fine-tuning starts from fresh Adam moments unless set.
  bool carry_optimizer_state = false;
  const emb::EmbeddingMatrix* pretrained = nullptr;
  std::optional<TransferPlan> plan;  // multi-target only; built from the model when empty
  bool require_plan = false;         // multi-target: fail instead of building a default plan
};

struct ParameterSnapshot {
  std::vector<std::pair<std::string, std::vector<double>>> values;
};

struct TransferOutcome {
  RunResult result;                   // metrics on the target domain
  std::optional<models::NliModel> model;
  // Multi-target freeze evidence: head values around each phase.
  ParameterSnapshot target_head_before_phase1, target_head_after_phase1;
  ParameterSnapshot source_head_before_phase2, source_head_after_phase2;
};

/// none: train and evaluate on the target. direct: train on the source, test on
/// the target. sequential: train on the source, then keep training every
/// parameter on the target. multi-target: phase 1 trains shared + source head
/// on the source, phase 2 trains shared + target head on the target; target
/// predictions use the target head. The vocabulary is the union of both
/// training splits.
TransferOutcome run_transfer(const data::Dataset& source, const data::Dataset& target, const TransferOptions& options);

ParameterSnapshot snapshot_params(const models::NliModel& model, const std::function<bool(std::string_view)>& select);

}  // namespace clinli::harness
