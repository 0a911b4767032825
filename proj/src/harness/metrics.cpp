#include "clinli/harness/metrics.hpp"

#include "clinli/error.hpp"

namespace clinli::harness {

using nlohmann::json;

Metrics compute_metrics(const std::vector<data::Label>& gold, const std::vector<data::Label>& predicted) {
  if (gold.empty()) throw Error("cannot evaluate an empty split");
  if (gold.size() != predicted.size()) throw Error("gold and predicted labels differ in length");
  Metrics m;
  m.n = gold.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++m.confusion[static_cast<std::size_t>(data::label_index(gold[i]))]
                 [static_cast<std::size_t>(data::label_index(predicted[i]))];
    correct += gold[i] == predicted[i] ? 1 : 0;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  for (std::size_t k = 0; k < data::kNumLabels; ++k) {
    std::size_t predicted_k = 0, support_k = 0;
    for (std::size_t j = 0; j < data::kNumLabels; ++j) {
      predicted_k += m.confusion[j][k];
      support_k += m.confusion[k][j];
    }
    const double tp = static_cast<double>(m.confusion[k][k]);
    m.precision[k] = predicted_k ? tp / static_cast<double>(predicted_k) : 0.0;
    m.recall[k] = support_k ? tp / static_cast<double>(support_k) : 0.0;
  }
  return m;
}

json metrics_to_json(const Metrics& m) {
  json precision = json::object(), recall = json::object();
  for (auto l : data::kLabels) {
    const auto k = static_cast<std::size_t>(data::label_index(l));
    precision[std::string(data::label_name(l))] = m.precision[k];
    recall[std::string(data::label_name(l))] = m.recall[k];
  }
  return {{"n", m.n}, {"accuracy", m.accuracy}, {"precision", precision}, {"recall", recall}, {"confusion", m.confusion}};
}

models::Prediction ensemble_predict(const std::vector<models::Prediction>& predictions) {
  if (predictions.empty()) throw Error("ensemble_predict: no predictions");
  models::Prediction out;
  out.probs = {};
  for (const auto& p : predictions)
    for (std::size_t k = 0; k < data::kNumLabels; ++k) out.probs[k] += p.probs[k];
  double total = 0;
  for (double v : out.probs) total += v;
  if (!(total > 0)) throw NumericError("ensemble_predict: distributions sum to zero");
  for (auto& v : out.probs) v /= total;
  out.label = models::argmax_label(out.probs);
  return out;
}

}  // namespace clinli::harness
