#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "clinli/autodiff/lstm.hpp"
#include "clinli/autodiff/parameters.hpp"
#include "clinli/data/vocab.hpp"
#include "clinli/embeddings/embedding_matrix.hpp"
#include "json.hpp"

namespace clinli::models {

enum class Architecture { bow, infersent, esim };

struct ModelSpec {
  Architecture architecture = Architecture::bow;
  bool kb_attention = false;
  std::size_t embedding_dim = 50;
  std::size_t hidden = 64;
  std::vector<std::size_t> mlp{128};
  double dropout = 0.0;
  bool train_embeddings = true;
  double kb_lambda = 1.0;
  std::uint64_t seed = 1;
};

/// "bow", "infersent", "esim", "infersent-kb", "esim-kb".
std::string model_name(const ModelSpec& spec);
/// Sets architecture and kb_attention from a model name; ConfigError otherwise.
void set_model_name(ModelSpec& spec, const std::string& name);
void validate(const ModelSpec& spec);
nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

struct Prediction {
  std::array<double, 3> probs{};
  data::Label label = data::Label::entailment;
};

/// argmax with ties going to the lowest class index.
data::Label argmax_label(const std::array<double, 3>& probs);

/// Optional intermediate values captured during a forward pass.
struct ForwardTrace {
  ad::Tensor premise_attention;     // ESIM: [B, Lp, Lh]
  ad::Tensor hypothesis_attention;  // ESIM: [B, Lh, Lp]
  ad::Tensor premise_encoded;       // ESIM: encoder states a-bar
  ad::Tensor hypothesis_encoded;    // ESIM: encoder states b-bar
  ad::Tensor premise_attended;      // ESIM: a-tilde
  ad::Tensor hypothesis_attended;   // ESIM: b-tilde
  ad::Tensor premise_kb_attended;   // ESIM-KB: knowledge-attended block for the premise
  std::size_t enhancement_width = 0;
  ad::Tensor combination;           // z, input of the MLP head
  std::size_t encoder_premise_steps = 0;
  std::size_t encoder_hypothesis_steps = 0;
};

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // needed when training with dropout
  ForwardTrace* trace = nullptr;
};

/// Shared trunk producing the combination vector z, followed by named MLP
/// heads of output size 3. Parameter names: "embedding", "encoder.*",
/// "projection.*", "composition.*" for the trunk and "head.<name>.*" per head.
class NliModel {
 public:
  /// Embedding rows come from `pretrained.lookup` when given (its dim must
  /// match), otherwise seeded uniform values in [-0.1, 0.1]; the PAD row is 0.
  NliModel(ModelSpec spec, data::Vocabulary vocab, const emb::EmbeddingMatrix* pretrained = nullptr,
           std::vector<std::string> heads = {"main"});

  const ModelSpec& spec() const noexcept { return spec_; }
  const data::Vocabulary& vocab() const noexcept { return vocab_; }
  ad::ParameterStore& params() noexcept { return params_; }
  const ad::ParameterStore& params() const noexcept { return params_; }
  const std::vector<std::string>& heads() const noexcept { return heads_; }
  std::size_t combination_dim() const noexcept { return combination_dim_; }
  const std::string& embedding_provenance() const noexcept { return provenance_; }

  void add_head(const std::string& name);
  bool has_head(const std::string& name) const;
  static std::string head_prefix(const std::string& head) { return "head." + head + "."; }
  static bool is_head_param(std::string_view name) { return name.rfind("head.", 0) == 0; }

  /// z for a batch; throws Error when a KB model gets a batch without
  /// attached knowledge attention.
  ad::Tensor combination(ad::Tape& tape, const data::Batch& batch, const ForwardOptions& options = {}) const;
  /// Unnormalized class scores [B, 3].
  ad::Tensor logits(ad::Tape& tape, const data::Batch& batch, const std::string& head = "main",
                    const ForwardOptions& options = {}) const;
  ad::Tensor loss(ad::Tape& tape, const data::Batch& batch, const std::string& head = "main",
                  const ForwardOptions& options = {}) const;
  std::vector<Prediction> predict(const data::Batch& batch, const std::string& head = "main") const;

  /// Checkpoint at `path` plus `<path>.manifest.json` holding the spec,
  /// heads, label order, vocabulary and embedding provenance.
  void save(const std::filesystem::path& path) const;
  static NliModel load(const std::filesystem::path& path);

  /// Deep copy; parameters of the copy are independent tensors.
  NliModel clone() const;
  NliModel(NliModel&&) = default;
  NliModel& operator=(NliModel&&) = default;
  NliModel(const NliModel&) = delete;
  NliModel& operator=(const NliModel&) = delete;

 private:
  struct Mlp {
    std::vector<std::pair<ad::Tensor, ad::Tensor>> layers;  // hidden layers then output
  };

  ad::Tensor head_forward(ad::Tape& tape, const ad::Tensor& z, const std::string& head,
                          const ForwardOptions& options) const;
  ad::Tensor embed(ad::Tape& tape, const std::vector<std::int64_t>& ids, std::size_t batch, std::size_t len) const;

  ModelSpec spec_;
  data::Vocabulary vocab_;
  std::string provenance_;
  ad::ParameterStore params_;
  std::vector<std::string> heads_;
  std::size_t combination_dim_ = 0;
  ad::Tensor embedding_;
  ad::LstmParams enc_fw_, enc_bw_, comp_fw_, comp_bw_;
  ad::Tensor proj_w_, proj_b_;
  std::vector<Mlp> mlps_;
  std::mt19937_64 init_rng_;
};

std::vector<Prediction> to_predictions(const ad::Tensor& logits);

}  // namespace clinli::models
