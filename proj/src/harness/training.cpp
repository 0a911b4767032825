#include "clinli/harness/training.hpp"

#include <chrono>
#include <cmath>

#include "clinli/autodiff/ops.hpp"
#include "clinli/data/vocab.hpp"
#include "clinli/error.hpp"
#include "clinli/ontology/kb.hpp"

namespace clinli::harness {

using nlohmann::json;

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience", "must be >= 1");
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  improved_last_ = epoch_ == 1 || val_loss < best_loss_;
  if (improved_last_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return false;
  }
  return ++since_best_ >= patience_;
}

void validate(const TrainConfig& c) {
  if (c.patience < 1) throw ConfigError("train.patience", "must be >= 1");
  if (c.batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (c.max_epochs < 1) throw ConfigError("train.max_epochs", "must be >= 1");
  if (!(c.adam.lr > 0.0)) throw ConfigError("train.lr", "must be > 0");
}

namespace {

std::vector<data::Batch> make_batches(const models::NliModel& model, const std::vector<data::NliPair>& pairs,
                                      std::size_t batch_size, bool shuffle, std::uint64_t seed,
                                      const onto::ConceptGraph* graph) {
  auto batches = data::batchify(pairs, model.vocab(), {batch_size, shuffle, seed});
  if (model.spec().kb_attention) {
    if (!graph) throw Error("model " + models::model_name(model.spec()) + " needs an ontology graph");
    for (auto& b : batches) onto::attach_kb_attention(b, *graph, model.spec().kb_lambda);
  }
  return batches;
}

std::string batch_ids(const data::Batch& b) {
  std::string out;
  for (std::size_t i = 0; i < b.pair_ids.size() && i < 5; ++i) out += (i ? ", " : "") + b.pair_ids[i];
  if (b.pair_ids.size() > 5) out += ", ...";
  return out;
}

}  // namespace

double mean_loss(const models::NliModel& model, const std::vector<data::NliPair>& pairs, const std::string& head,
                 const onto::ConceptGraph* graph, std::size_t batch_size) {
  if (pairs.empty()) throw Error("cannot compute a loss over an empty split");
  double total = 0;
  for (const auto& b : make_batches(model, pairs, batch_size, false, 0, graph)) {
    ad::Tape tape;
    tape.set_recording(false);
    total += model.loss(tape, b, head).item() * static_cast<double>(b.size);
  }
  return total / static_cast<double>(pairs.size());
}

std::vector<models::Prediction> predict_pairs(const models::NliModel& model, const std::vector<data::NliPair>& pairs,
                                              const std::string& head, const onto::ConceptGraph* graph,
                                              std::size_t batch_size) {
  std::vector<models::Prediction> out;
  out.reserve(pairs.size());
  for (const auto& b : make_batches(model, pairs, batch_size, false, 0, graph)) {
    auto p = model.predict(b, head);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Metrics evaluate(const models::NliModel& model, const std::vector<data::NliPair>& pairs, const std::string& head,
                 const onto::ConceptGraph* graph, std::size_t batch_size) {
  if (pairs.empty()) throw Error("cannot evaluate an empty split");
  auto preds = predict_pairs(model, pairs, head, graph, batch_size);
  std::vector<data::Label> gold, predicted;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    gold.push_back(pairs[i].label);
    predicted.push_back(preds[i].label);
  }
  return compute_metrics(gold, predicted);
}

TrainHistory train_model(models::NliModel& model, const std::vector<data::NliPair>& train,
                         const std::vector<data::NliPair>& dev, const TrainConfig& config, ad::Adam* optimizer) {
  validate(config);
  if (train.empty()) throw Error("training split is empty");
  if (dev.empty() && config.scripted_val_loss.empty()) throw Error("validation split is empty");
  ad::Adam local(config.adam);
  ad::Adam& adam = optimizer ? *optimizer : local;
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  EarlyStopping stopper(config.patience);
  TrainHistory history;
  ad::ParameterStore best = model.params().snapshot();
  const std::size_t max_epochs =
      config.scripted_val_loss.empty() ? config.max_epochs : std::min(config.max_epochs, config.scripted_val_loss.size());

  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    const auto batches = make_batches(model, train, config.batch_size, true, config.seed * 1000003ULL + epoch,
                                      config.graph);
    double total = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      model.params().zero_grad();
      ad::Tape tape;
      models::ForwardOptions opts;
      opts.training = true;
      opts.rng = &dropout_rng;
      ad::Tensor loss = model.loss(tape, batch, config.head, opts);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss " + std::to_string(value) + " at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(bi + 1) + " (pairs " + batch_ids(batch) + ")");
      }
      tape.backward(loss);
      adam.step(model.params(), config.trainable);
      total += value * static_cast<double>(batch.size);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(train.size());
    rec.val_loss = config.scripted_val_loss.empty() ? mean_loss(model, dev, config.head, config.graph)
                                                    : config.scripted_val_loss[epoch - 1];
    if (!std::isfinite(rec.val_loss))
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    history.epochs.push_back(rec);
    const bool stop = stopper.update(rec.val_loss);
    if (stopper.improved_last()) best = model.params().snapshot();
    if (stop) {
      history.stopped_early = true;
      break;
    }
  }
  model.params().assign_from(best);
  history.best_epoch = stopper.best_epoch();
  history.best_val_loss = stopper.best_loss();
  return history;
}

data::Vocabulary vocabulary_for(std::initializer_list<const std::vector<data::NliPair>*> splits) {
  data::DatasetSplit all;
  for (const auto* s : splits) all.pairs.insert(all.pairs.end(), s->begin(), s->end());
  return data::build_vocab(all);
}

namespace {

json epochs_json(const std::vector<EpochRecord>& epochs) {
  json out = json::array();
  for (const auto& e : epochs) out.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  return out;
}

std::vector<EpochRecord> epochs_from(const json& j) {
  std::vector<EpochRecord> out;
  for (const auto& e : j) out.push_back({e.at("epoch"), e.at("train_loss"), e.at("val_loss")});
  return out;
}

Metrics metrics_from(const json& j) {
  Metrics m;
  m.n = j.at("n");
  m.accuracy = j.at("accuracy");
  for (auto l : data::kLabels) {
    const auto k = static_cast<std::size_t>(data::label_index(l));
    m.precision[k] = j.at("precision").at(std::string(data::label_name(l)));
    m.recall[k] = j.at("recall").at(std::string(data::label_name(l)));
  }
  m.confusion = j.at("confusion").get<decltype(m.confusion)>();
  return m;
}

}  // namespace

json run_result_to_json(const RunResult& r, bool include_wall_time) {
  json j{{"experiment", r.experiment},
         {"model", r.model},
         {"transfer_mode", r.transfer_mode},
         {"seed", r.seed},
         {"epochs", epochs_json(r.epochs)},
         {"source_epochs", epochs_json(r.source_epochs)},
         {"best_epoch", r.best_epoch},
         {"dev", r.dev.n ? metrics_to_json(r.dev) : json(nullptr)},
         {"test", r.test.n ? metrics_to_json(r.test) : json(nullptr)},
         {"checkpoint", r.checkpoint}};
  if (include_wall_time) j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

RunResult run_result_from_json(const json& j) {
  RunResult r;
  r.experiment = j.at("experiment");
  r.model = j.at("model");
  r.transfer_mode = j.value("transfer_mode", "none");
  r.seed = j.at("seed");
  r.epochs = epochs_from(j.at("epochs"));
  if (j.contains("source_epochs")) r.source_epochs = epochs_from(j["source_epochs"]);
  r.best_epoch = j.at("best_epoch");
  if (!j.at("dev").is_null()) r.dev = metrics_from(j["dev"]);
  if (!j.at("test").is_null()) r.test = metrics_from(j["test"]);
  r.checkpoint = j.value("checkpoint", "");
  r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
  return r;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& root, const std::string& experiment,
                                      std::uint64_t seed) {
  return root / experiment / std::to_string(seed) / "best.ckpt";
}

std::vector<data::NliPair> hypothesis_only(const std::vector<data::NliPair>& pairs) {
  std::vector<data::NliPair> out = pairs;
  for (auto& p : out) p.premise = {kPremisePlaceholder};
  return out;
}

}  // namespace clinli::harness
