#include "clinli/models/nli_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "clinli/autodiff/ops.hpp"
#include "clinli/error.hpp"

namespace clinli::models {

using ad::Mask;
using ad::Tape;
using ad::Tensor;
using nlohmann::json;

std::string model_name(const ModelSpec& spec) {
  std::string base = spec.architecture == Architecture::bow         ? "bow"
                     : spec.architecture == Architecture::infersent ? "infersent"
                                                                    : "esim";
  return spec.kb_attention ? base + "-kb" : base;
}

void set_model_name(ModelSpec& spec, const std::string& name) {
  static const std::vector<std::tuple<std::string, Architecture, bool>> names{
      {"bow", Architecture::bow, false},           {"infersent", Architecture::infersent, false},
      {"esim", Architecture::esim, false},         {"infersent-kb", Architecture::infersent, true},
      {"esim-kb", Architecture::esim, true}};
  for (const auto& [n, arch, kb] : names) {
    if (n == name) {
      spec.architecture = arch;
      spec.kb_attention = kb;
      return;
    }
  }
  throw ConfigError("model.architecture",
                    "unknown architecture \"" + name + "\" (expected bow, infersent, esim, infersent-kb, esim-kb)");
}

void validate(const ModelSpec& spec) {
  if (spec.embedding_dim < 1) throw ConfigError("model.embedding_dim", "must be >= 1");
  if (spec.hidden < 1) throw ConfigError("model.hidden", "must be >= 1");
  for (auto h : spec.mlp)
    if (h < 1) throw ConfigError("model.mlp", "layer sizes must be >= 1");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw ConfigError("model.dropout", "must be in [0, 1)");
  if (!(spec.kb_lambda > 0.0)) throw ConfigError("model.kb_lambda", "must be > 0");
  if (spec.kb_attention && spec.architecture == Architecture::bow)
    throw ConfigError("model.architecture", "knowledge-directed attention exists for infersent and esim only");
}

json spec_to_json(const ModelSpec& s) {
  return {{"architecture", model_name(s)}, {"embedding_dim", s.embedding_dim}, {"hidden", s.hidden},
          {"mlp", s.mlp},                  {"dropout", s.dropout},             {"train_embeddings", s.train_embeddings},
          {"kb_lambda", s.kb_lambda},      {"seed", s.seed}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  set_model_name(s, j.at("architecture").get<std::string>());
  s.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::size_t>();
  s.mlp = j.at("mlp").get<std::vector<std::size_t>>();
  s.dropout = j.at("dropout").get<double>();
  s.train_embeddings = j.at("train_embeddings").get<bool>();
  s.kb_lambda = j.at("kb_lambda").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

data::Label argmax_label(const std::array<double, 3>& probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < 3; ++k)
    if (probs[k] > probs[best]) best = k;
  return data::kLabels[best];
}

namespace {

Tensor glorot(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<double> v(in * out);
  for (auto& x : v) x = u(rng);
  return Tensor::from({in, out}, std::move(v));
}

// Mask valid at (b, i, j) iff position i of the row sentence and position j
// of the column sentence are both valid.
Mask pair_mask(const Mask& rows, const Mask& cols) {
  const std::size_t b = rows.shape[0], n = rows.shape[1], m = cols.shape[1];
  Mask out{{b, n, m}, std::vector<std::uint8_t>(b * n * m, 0)};
  for (std::size_t x = 0; x < b; ++x)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        out.valid[(x * n + i) * m + j] = rows.valid[x * n + i] && cols.valid[x * m + j];
  return out;
}

// [a_1..a_n, extra_1..extra_n, pad...] from x = [B, L, D] and extra = [B, L, D].
std::pair<Tensor, Mask> append_in_time(Tape& tape, const Tensor& x, const Tensor& extra, const Mask& mask) {
  const std::size_t batch = x.dim(0), len = x.dim(1);
  const Tensor parts[] = {x, extra};
  Tensor both = ad::concat(tape, parts, 1);
  std::vector<std::int64_t> index(batch * 2 * len, -1);
  Mask out{{batch, 2 * len}, std::vector<std::uint8_t>(batch * 2 * len, 0)};
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t n = 0;
    for (std::size_t t = 0; t < len; ++t) n += mask.valid[b * len + t] ? 1 : 0;
    for (std::size_t t = 0; t < n; ++t) {
      index[b * 2 * len + t] = static_cast<std::int64_t>(t);
      index[b * 2 * len + n + t] = static_cast<std::int64_t>(len + t);
      out.valid[b * 2 * len + t] = out.valid[b * 2 * len + n + t] = 1;
    }
  }
  return {ad::gather_time(tape, both, index, 2 * len), out};
}

Tensor kb_tensor(const std::vector<double>& values, std::size_t b, std::size_t n, std::size_t m) {
  return Tensor::from({b, n, m}, values);
}

}  // namespace

NliModel::NliModel(ModelSpec spec, data::Vocabulary vocab, const emb::EmbeddingMatrix* pretrained,
                   std::vector<std::string> heads)
    : spec_(std::move(spec)), vocab_(std::move(vocab)), init_rng_(spec_.seed) {
  validate(spec_);
  const std::size_t e = spec_.embedding_dim, h = spec_.hidden;
  std::vector<double> table(vocab_.size() * e, 0.0);
  if (pretrained) {
    if (pretrained->dim() != e) {
      throw ShapeError("pretrained vectors have dim " + std::to_string(pretrained->dim()) + ", model expects " +
                       std::to_string(e));
    }
    provenance_ = pretrained->provenance();
    for (std::size_t i = 2; i < vocab_.size(); ++i) {
      auto v = pretrained->lookup(vocab_.token(static_cast<std::int64_t>(i)));
      std::copy(v.begin(), v.end(), table.begin() + static_cast<std::ptrdiff_t>(i * e));
    }
  } else {
    provenance_ = "random";
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (std::size_t i = e; i < table.size(); ++i) table[i] = u(init_rng_);
  }
  embedding_ = params_.add("embedding", Tensor::from({vocab_.size(), e}, std::move(table)));
  embedding_.set_requires_grad(spec_.train_embeddings);

  switch (spec_.architecture) {
    case Architecture::bow:
      combination_dim_ = 2 * e;
      break;
    case Architecture::infersent:
      enc_fw_ = ad::LstmParams::create(params_, "encoder.fw", e, h, init_rng_);
      enc_bw_ = ad::LstmParams::create(params_, "encoder.bw", e, h, init_rng_);
      combination_dim_ = 8 * h;
      break;
    case Architecture::esim: {
      enc_fw_ = ad::LstmParams::create(params_, "encoder.fw", e, h, init_rng_);
      enc_bw_ = ad::LstmParams::create(params_, "encoder.bw", e, h, init_rng_);
      const std::size_t enhanced = (spec_.kb_attention ? 5 : 4) * 2 * h;
      proj_w_ = params_.add("projection.w", glorot(enhanced, h, init_rng_));
      proj_b_ = params_.add("projection.b", Tensor::zeros({h}));
      comp_fw_ = ad::LstmParams::create(params_, "composition.fw", h, h, init_rng_);
      comp_bw_ = ad::LstmParams::create(params_, "composition.bw", h, h, init_rng_);
      combination_dim_ = 8 * h;
      break;
    }
  }
  for (const auto& name : heads) add_head(name);
}

void NliModel::add_head(const std::string& name) {
  if (has_head(name)) throw Error("head \"" + name + "\" already exists");
  Mlp mlp;
  std::size_t in = combination_dim_;
  const std::string prefix = head_prefix(name);
  for (std::size_t l = 0; l < spec_.mlp.size(); ++l) {
    const std::string lp = prefix + "l" + std::to_string(l);
    Tensor w = params_.add(lp + ".W", glorot(in, spec_.mlp[l], init_rng_));
    Tensor b = params_.add(lp + ".b", Tensor::zeros({spec_.mlp[l]}));
    mlp.layers.emplace_back(w, b);
    in = spec_.mlp[l];
  }
  Tensor w = params_.add(prefix + "out.W", glorot(in, data::kNumLabels, init_rng_));
  Tensor b = params_.add(prefix + "out.b", Tensor::zeros({data::kNumLabels}));
  mlp.layers.emplace_back(w, b);
  heads_.push_back(name);
  mlps_.push_back(std::move(mlp));
}

bool NliModel::has_head(const std::string& name) const {
  return std::find(heads_.begin(), heads_.end(), name) != heads_.end();
}

Tensor NliModel::embed(Tape& tape, const std::vector<std::int64_t>& ids, std::size_t batch, std::size_t len) const {
  return ad::embedding(tape, embedding_, ids, {batch, len});
}

Tensor NliModel::combination(Tape& tape, const data::Batch& batch, const ForwardOptions& options) const {
  if (batch.size == 0) throw Error("empty batch");
  if (spec_.kb_attention && !batch.has_kb())
    throw Error("model " + model_name(spec_) + " needs knowledge attention attached to the batch");
  const std::size_t B = batch.size, lp = batch.premise_len, lh = batch.hypothesis_len;
  Tensor p, h;
  if (spec_.architecture != Architecture::bow) {
    p = embed(tape, batch.premise_ids, B, lp);
    h = embed(tape, batch.hypothesis_ids, B, lh);
  }
  Tensor z;
  ForwardTrace* trace = options.trace;

  switch (spec_.architecture) {
    case Architecture::bow: {
      // Summing in id order makes the pooled vector bitwise independent of token order.
      auto canonical = [](std::vector<std::int64_t> ids, const Mask& mask, std::size_t len) {
        for (std::size_t b = 0; b * len < ids.size(); ++b) {
          std::vector<std::int64_t> valid;
          for (std::size_t t = 0; t < len; ++t)
            if (mask.valid[b * len + t]) valid.push_back(ids[b * len + t]);
          std::sort(valid.begin(), valid.end());
          std::size_t k = 0;
          for (std::size_t t = 0; t < len; ++t)
            if (mask.valid[b * len + t]) ids[b * len + t] = valid[k++];
        }
        return ids;
      };
      p = embed(tape, canonical(batch.premise_ids, batch.premise_mask, lp), B, lp);
      h = embed(tape, canonical(batch.hypothesis_ids, batch.hypothesis_mask, lh), B, lh);
      const Tensor parts[] = {ad::sum_pool_time(tape, p, batch.premise_mask),
                              ad::sum_pool_time(tape, h, batch.hypothesis_mask)};
      z = ad::concat(tape, parts, 1);
      break;
    }
    case Architecture::infersent: {
      Mask pm = batch.premise_mask, hm = batch.hypothesis_mask;
      if (spec_.kb_attention) {
        Tensor p_kb = ad::bmm(tape, kb_tensor(batch.kb_premise_to_hypothesis, B, lp, lh), h);
        Tensor h_kb = ad::bmm(tape, kb_tensor(batch.kb_hypothesis_to_premise, B, lh, lp), p);
        std::tie(p, pm) = append_in_time(tape, p, p_kb, batch.premise_mask);
        std::tie(h, hm) = append_in_time(tape, h, h_kb, batch.hypothesis_mask);
      }
      if (trace) {
        trace->encoder_premise_steps = p.dim(1);
        trace->encoder_hypothesis_steps = h.dim(1);
      }
      Tensor u = ad::max_pool_time(tape, ad::bilstm_encode(tape, p, pm, enc_fw_, enc_bw_), pm);
      Tensor v = ad::max_pool_time(tape, ad::bilstm_encode(tape, h, hm, enc_fw_, enc_bw_), hm);
      const Tensor parts[] = {u, v, ad::abs(tape, ad::sub(tape, u, v)), ad::mul(tape, u, v)};
      z = ad::concat(tape, parts, 1);
      break;
    }
    case Architecture::esim: {
      const Mask& pm = batch.premise_mask;
      const Mask& hm = batch.hypothesis_mask;
      Tensor a = ad::bilstm_encode(tape, p, pm, enc_fw_, enc_bw_);
      Tensor b = ad::bilstm_encode(tape, h, hm, enc_fw_, enc_bw_);
      Tensor e = ad::bmm(tape, a, ad::transpose_last(tape, b));
      const Mask ab = pair_mask(pm, hm), ba = pair_mask(hm, pm);
      Tensor attn_a = ad::softmax(tape, e, &ab);
      Tensor attn_b = ad::softmax(tape, ad::transpose_last(tape, e), &ba);
      if (trace) {
        trace->premise_attention = attn_a;
        trace->hypothesis_attention = attn_b;
      }
      Tensor a_tilde = ad::bmm(tape, attn_a, b);
      Tensor b_tilde = ad::bmm(tape, attn_b, a);
      if (trace) {
        trace->premise_encoded = a;
        trace->hypothesis_encoded = b;
        trace->premise_attended = a_tilde;
        trace->hypothesis_attended = b_tilde;
        trace->enhancement_width = proj_w_.dim(0);
      }
      auto enhance = [&](const Tensor& x, const Tensor& x_tilde, const Tensor* kb, const Mask& mask) {
        std::vector<Tensor> parts{x, x_tilde, ad::sub(tape, x, x_tilde), ad::mul(tape, x, x_tilde)};
        if (kb) parts.push_back(*kb);
        Tensor m = ad::concat(tape, parts, 2);
        Tensor projected = ad::relu(tape, ad::add(tape, ad::matmul(tape, m, proj_w_), proj_b_));
        return ad::apply_mask(tape, projected, mask);
      };
      Tensor ma, mb;
      if (spec_.kb_attention) {
        Tensor a_kb = ad::bmm(tape, kb_tensor(batch.kb_premise_to_hypothesis, B, lp, lh), b);
        Tensor b_kb = ad::bmm(tape, kb_tensor(batch.kb_hypothesis_to_premise, B, lh, lp), a);
        if (trace) trace->premise_kb_attended = a_kb;
        ma = enhance(a, a_tilde, &a_kb, pm);
        mb = enhance(b, b_tilde, &b_kb, hm);
      } else {
        ma = enhance(a, a_tilde, nullptr, pm);
        mb = enhance(b, b_tilde, nullptr, hm);
      }
      Tensor va = ad::bilstm_encode(tape, ma, pm, comp_fw_, comp_bw_);
      Tensor vb = ad::bilstm_encode(tape, mb, hm, comp_fw_, comp_bw_);
      const Tensor parts[] = {ad::mean_pool_time(tape, va, pm), ad::max_pool_time(tape, va, pm),
                              ad::mean_pool_time(tape, vb, hm), ad::max_pool_time(tape, vb, hm)};
      z = ad::concat(tape, parts, 1);
      break;
    }
  }
  if (trace) trace->combination = z;
  return z;
}

Tensor NliModel::head_forward(Tape& tape, const Tensor& z, const std::string& head,
                              const ForwardOptions& options) const {
  auto it = std::find(heads_.begin(), heads_.end(), head);
  if (it == heads_.end()) throw Error("model has no head \"" + head + "\"");
  const Mlp& mlp = mlps_[static_cast<std::size_t>(it - heads_.begin())];
  const bool drop = options.training && spec_.dropout > 0.0;
  if (drop && !options.rng) throw Error("dropout during training needs an rng");
  Tensor x = drop ? ad::dropout(tape, z, spec_.dropout, *options.rng) : z;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    x = ad::add(tape, ad::matmul(tape, x, mlp.layers[l].first), mlp.layers[l].second);
    if (l + 1 < mlp.layers.size()) {
      x = ad::relu(tape, x);
      if (drop) x = ad::dropout(tape, x, spec_.dropout, *options.rng);
    }
  }
  return x;
}

Tensor NliModel::logits(Tape& tape, const data::Batch& batch, const std::string& head,
                        const ForwardOptions& options) const {
  return head_forward(tape, combination(tape, batch, options), head, options);
}

Tensor NliModel::loss(Tape& tape, const data::Batch& batch, const std::string& head,
                      const ForwardOptions& options) const {
  return ad::softmax_cross_entropy(tape, logits(tape, batch, head, options), batch.labels);
}

std::vector<Prediction> to_predictions(const Tensor& logits) {
  Tape tape;
  tape.set_recording(false);
  Tensor probs = ad::softmax(tape, logits);
  std::vector<Prediction> out(logits.dim(0));
  for (std::size_t b = 0; b < out.size(); ++b) {
    for (std::size_t k = 0; k < 3; ++k) out[b].probs[k] = probs[b * 3 + k];
    out[b].label = argmax_label(out[b].probs);
  }
  return out;
}

std::vector<Prediction> NliModel::predict(const data::Batch& batch, const std::string& head) const {
  Tape tape;
  tape.set_recording(false);
  return to_predictions(logits(tape, batch, head));
}

void NliModel::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  ad::save_checkpoint(path, params_);
  json manifest{{"format", "clinli-model"},
                {"version", 1},
                {"spec", spec_to_json(spec_)},
                {"heads", heads_},
                {"labels", json::array()},
                {"embedding_provenance", provenance_},
                {"vocabulary", vocab_.tokens()}};
  for (auto l : data::kLabels) manifest["labels"].push_back(data::label_name(l));
  std::ofstream out(path.string() + ".manifest.json");
  if (!out) throw Error("cannot write model manifest for " + path.string());
  out << manifest.dump(2) << '\n';
}

NliModel NliModel::clone() const {
  NliModel copy(spec_, vocab_, nullptr, heads_);
  copy.provenance_ = provenance_;
  copy.params_.assign_from(params_);
  for (auto& [name, t] : copy.params_) t.set_requires_grad(params_.at(name).requires_grad());
  return copy;
}

NliModel NliModel::load(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".manifest.json");
  if (!in) throw Error("cannot open model manifest " + path.string() + ".manifest.json");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model manifest: ") + e.what(), 0);
  }
  const auto tokens = manifest.at("vocabulary").get<std::vector<std::string>>();
  data::Vocabulary vocab;
  for (std::size_t i = 2; i < tokens.size(); ++i) vocab.add(tokens[i]);
  NliModel model(spec_from_json(manifest.at("spec")), std::move(vocab), nullptr,
                 manifest.at("heads").get<std::vector<std::string>>());
  model.provenance_ = manifest.value("embedding_provenance", "");
  ad::load_checkpoint(path, model.params_);
  return model;
}

}  // namespace clinli::models
