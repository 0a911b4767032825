#include "clinli/harness/transfer.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "clinli/error.hpp"

namespace clinli::harness {

std::string_view transfer_mode_name(TransferMode mode) {
  switch (mode) {
    case TransferMode::none: return "none";
    case TransferMode::direct: return "direct";
    case TransferMode::sequential: return "sequential";
    case TransferMode::multi_target: return "multi-target";
  }
  return "none";
}

TransferMode parse_transfer_mode(std::string_view name) {
  for (auto m : {TransferMode::none, TransferMode::direct, TransferMode::sequential, TransferMode::multi_target})
    if (transfer_mode_name(m) == name) return m;
  throw ConfigError("transfer.mode", "unknown transfer mode \"" + std::string(name) +
                                         "\" (expected none, direct, sequential, multi-target)");
}

namespace {
bool contains(const std::vector<std::string>& v, std::string_view name) {
  return std::find(v.begin(), v.end(), name) != v.end();
}
}  // namespace

bool TransferPlan::in_shared(std::string_view name) const { return contains(shared, name); }
bool TransferPlan::in_source(std::string_view name) const { return contains(source, name); }
bool TransferPlan::in_target(std::string_view name) const { return contains(target, name); }

TransferPlan make_transfer_plan(const models::NliModel& model, const std::string& source_head,
                                const std::string& target_head) {
  if (source_head == target_head) throw Error("source and target heads must differ");
  for (const auto& h : {source_head, target_head})
    if (!model.has_head(h)) throw Error("model has no head \"" + h + "\"");
  TransferPlan plan;
  plan.source_head = source_head;
  plan.target_head = target_head;
  const std::string sp = models::NliModel::head_prefix(source_head), tp = models::NliModel::head_prefix(target_head);
  for (const auto& [name, t] : model.params()) {
    if (name.rfind(sp, 0) == 0) plan.source.push_back(name);
    else if (name.rfind(tp, 0) == 0) plan.target.push_back(name);
    else if (models::NliModel::is_head_param(name)) throw Error("parameter " + name + " belongs to a third head");
    else plan.shared.push_back(name);
  }
  return plan;
}

void check_plan(const TransferPlan& plan, const models::NliModel& model) {
  std::set<std::string> seen;
  for (const auto* group : {&plan.shared, &plan.source, &plan.target})
    for (const auto& name : *group) {
      if (!model.params().contains(name)) throw Error("transfer plan names unknown parameter " + name);
      if (!seen.insert(name).second) throw Error("transfer plan lists " + name + " in more than one group");
    }
  for (const auto& [name, t] : model.params())
    if (!seen.count(name)) throw Error("transfer plan does not cover parameter " + name);
  for (const auto& name : plan.source)
    if (name.rfind(models::NliModel::head_prefix(plan.source_head), 0) != 0)
      throw Error("source group holds " + name + " outside head " + plan.source_head);
  for (const auto& name : plan.target)
    if (name.rfind(models::NliModel::head_prefix(plan.target_head), 0) != 0)
      throw Error("target group holds " + name + " outside head " + plan.target_head);
}

ParameterSnapshot snapshot_params(const models::NliModel& model, const std::function<bool(std::string_view)>& select) {
  ParameterSnapshot s;
  for (const auto& [name, t] : model.params())
    if (select(name)) s.values.emplace_back(name, std::vector<double>(t.data().begin(), t.data().end()));
  return s;
}

TransferOutcome run_transfer(const data::Dataset& source, const data::Dataset& target, const TransferOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate(options.train);
  const TransferMode mode = options.mode;
  if (target.test.pairs.empty()) throw Error("target test split is empty");
  if (mode != TransferMode::none && (source.train.pairs.empty() || source.dev.pairs.empty()))
    throw Error("source train and dev splits must be non-empty for transfer");
  if (mode == TransferMode::multi_target && options.require_plan && !options.plan)
    throw ConfigError("transfer.plan", "multi-target transfer needs a transfer plan");

  const data::Vocabulary vocab = mode == TransferMode::none
                                     ? vocabulary_for({&target.train.pairs})
                                     : vocabulary_for({&source.train.pairs, &target.train.pairs});
  std::vector<std::string> heads{"main"};
  if (mode == TransferMode::multi_target) heads = {"source", "target"};
  models::NliModel model(options.spec, vocab, options.pretrained, heads);

  TransferOutcome out;
  RunResult& r = out.result;
  r.model = models::model_name(options.spec);
  r.transfer_mode = std::string(transfer_mode_name(mode));
  r.seed = options.train.seed;
  std::string eval_head = "main";

  TrainConfig cfg = options.train;
  ad::Adam adam(cfg.adam);
  switch (mode) {
    case TransferMode::none: {
      cfg.head = "main";
      auto h = train_model(model, target.train.pairs, target.dev.pairs, cfg, &adam);
      r.epochs = h.epochs;
      r.best_epoch = h.best_epoch;
      break;
    }
    case TransferMode::direct: {
      cfg.head = "main";
      auto h = train_model(model, source.train.pairs, source.dev.pairs, cfg, &adam);
      r.source_epochs = h.epochs;
      r.best_epoch = h.best_epoch;
      break;
    }
    case TransferMode::sequential: {
      cfg.head = "main";
      auto h1 = train_model(model, source.train.pairs, source.dev.pairs, cfg, &adam);
      r.source_epochs = h1.epochs;
      if (!options.carry_optimizer_state) adam.reset();
      auto h2 = train_model(model, target.train.pairs, target.dev.pairs, cfg, &adam);
      r.epochs = h2.epochs;
      r.best_epoch = h2.best_epoch;
      break;
    }
    case TransferMode::multi_target: {
      TransferPlan plan = options.plan ? *options.plan : make_transfer_plan(model, "source", "target");
      check_plan(plan, model);
      eval_head = plan.target_head;
      auto is_target = [&](std::string_view n) { return plan.in_target(n); };
      auto is_source = [&](std::string_view n) { return plan.in_source(n); };
      out.target_head_before_phase1 = snapshot_params(model, is_target);
      cfg.head = plan.source_head;
      cfg.trainable = [&](std::string_view n) { return plan.in_shared(n) || plan.in_source(n); };
      auto h1 = train_model(model, source.train.pairs, source.dev.pairs, cfg, &adam);
      r.source_epochs = h1.epochs;
      out.target_head_after_phase1 = snapshot_params(model, is_target);
      out.source_head_before_phase2 = snapshot_params(model, is_source);
      if (!options.carry_optimizer_state) adam.reset();
      cfg.head = plan.target_head;
      cfg.trainable = [&](std::string_view n) { return plan.in_shared(n) || plan.in_target(n); };
      auto h2 = train_model(model, target.train.pairs, target.dev.pairs, cfg, &adam);
      r.epochs = h2.epochs;
      r.best_epoch = h2.best_epoch;
      out.source_head_after_phase2 = snapshot_params(model, is_source);
      break;
    }
  }
  if (!target.dev.pairs.empty()) r.dev = evaluate(model, target.dev.pairs, eval_head, cfg.graph);
  r.test = evaluate(model, target.test.pairs, eval_head, cfg.graph);
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.model.emplace(std::move(model));
  return out;
}

}  // namespace clinli::harness
