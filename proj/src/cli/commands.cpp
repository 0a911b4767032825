#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "clinli/autodiff/grad_check.hpp"
#include "clinli/cli/cli.hpp"
#include "clinli/data/annotation.hpp"
#include "clinli/data/dataset_io.hpp"
#include "clinli/data/stats.hpp"
#include "clinli/data/synthetic.hpp"
#include "clinli/data/text.hpp"
#include "clinli/data/vocab.hpp"
#include "clinli/embeddings/retrofit.hpp"
#include "clinli/embeddings/skipgram.hpp"
#include "clinli/embeddings/vectors_io.hpp"
#include "clinli/error.hpp"
#include "clinli/harness/report.hpp"
#include "clinli/harness/transfer.hpp"
#include "clinli/models/features.hpp"
#include "clinli/models/gbm.hpp"
#include "clinli/ontology/kb.hpp"

namespace clinli::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- helpers

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string require_path(const ResolvedConfig& c, const std::string& key) {
  const std::string p = c.str(key);
  if (p.empty()) throw ConfigError(key, "an input path is required");
  return p;
}

std::vector<KeySpec> data_keys(const std::string& p, bool named) {
  std::vector<KeySpec> k{
      {p + ".train", "", "Training split, SNLI-style JSON lines."},
      {p + ".dev", "", "Validation split used for early stopping."},
      {p + ".test", "", "Test split."},
      {p + ".synthetic", "", "Generate the splits instead of reading files: clinical or general."},
      {p + ".planted", false, "Synthetic data with label-revealing hypothesis words."},
      {p + ".sizes", json::array({96, 24, 24}), "Synthetic pairs per split (train, dev, test)."},
      {p + ".seed", 1u, "Seed of the synthetic generator."}};
  if (named) k.push_back({p + ".name", "", "Domain name used in reports; defaults to the synthetic domain or train file stem."});
  return k;
}

data::Dataset load_dataset(const RunContext& ctx, const std::string& p) {
  const auto& c = ctx.config;
  data::Dataset ds;
  if (!c.str(p + ".synthetic").empty()) {
    data::SyntheticSpec spec;
    spec.domain = data::DomainProfile::by_name(c.str(p + ".synthetic"));
    spec.planted_artifacts = c.flag(p + ".planted");
    const auto sizes = c.list<std::size_t>(p + ".sizes");
    if (sizes.size() != 3) throw ConfigError(p + ".sizes", "needs three entries");
    spec.sizes = {sizes[0], sizes[1], sizes[2]};
    return data::generate_synthetic_dataset(spec, c.uint(p + ".seed"));
  }
  for (auto [name, split] : {std::pair{data::SplitName::train, &ds.train}, std::pair{data::SplitName::dev, &ds.dev},
                             std::pair{data::SplitName::test, &ds.test}}) {
    const std::string key = p + "." + std::string(data::split_name(name));
    const std::string path = c.str(key);
    if (path.empty()) continue;
    auto r = data::read_jsonl(fs::path(path), name);
    if (r.skipped_unlabeled)
      ctx.log << key << ": skipped " << r.skipped_unlabeled << " records without a gold label\n";
    *split = std::move(r.split);
  }
  return ds;
}

std::string domain_name(const ResolvedConfig& c, const std::string& p) {
  if (!c.str(p + ".name").empty()) return c.str(p + ".name");
  if (!c.str(p + ".synthetic").empty()) return c.str(p + ".synthetic");
  if (!c.str(p + ".train").empty()) return fs::path(c.str(p + ".train")).stem().string();
  return p;
}

std::vector<KeySpec> model_keys(bool allow_gbm) {
  return {{"model.architecture", "bow",
           std::string("bow, infersent, esim, infersent-kb or esim-kb") + (allow_gbm ? ", or gbm for the feature-based baseline." : ".")},
          {"model.embedding_dim", 50u, "Word vector size; must match embeddings.vectors when given."},
          {"model.hidden", 64u, "LSTM hidden size per direction."},
          {"model.mlp", json::array({128}), "Hidden layer sizes of the relu classifier."},
          {"model.dropout", 0.0, "Dropout rate on classifier inputs during training."},
          {"model.train_embeddings", true, "Update word vectors during training."},
          {"model.kb_lambda", 1.0, "Decay of knowledge-directed attention, weight exp(-lambda * path length)."}};
}

std::vector<KeySpec> training_keys() {
  return {{"training.max_epochs", 50u, "Upper bound on epochs per training phase."},
          {"training.patience", 5u, "Epochs without a strict dev-loss improvement before stopping."},
          {"training.batch_size", 32u, "Pairs per minibatch."},
          {"training.lr", 0.001, "Adam learning rate."}};
}

std::vector<KeySpec> gbm_keys() {
  return {{"gbm.rounds", 100u, "Boosting rounds."},
          {"gbm.max_depth", 3u, "Depth of each regression tree."},
          {"gbm.learning_rate", 0.1, "Shrinkage applied to every tree."},
          {"gbm.min_samples_leaf", 1u, "Minimum rows per leaf."}};
}

std::vector<KeySpec> skipgram_keys() {
  emb::SkipgramConfig d;
  return {{"skipgram.dim", d.dim, "Vector size."},
          {"skipgram.window", d.window, "Maximum context distance; the effective window is drawn per center."},
          {"skipgram.negatives", d.negatives, "Negative samples per context word."},
          {"skipgram.epochs", d.epochs, "Passes over the corpus."},
          {"skipgram.lr", d.lr, "Initial learning rate, decayed linearly to zero."},
          {"skipgram.min_count", d.min_count, "Minimum token frequency."},
          {"skipgram.ngram_min", d.subwords.min_n, "Shortest character n-gram."},
          {"skipgram.ngram_max", d.subwords.max_n, "Longest character n-gram."},
          {"skipgram.buckets", d.subwords.buckets, "Hash buckets for character n-grams."},
          {"skipgram.seed", d.seed, "Seed."}};
}

emb::SkipgramConfig skipgram_config(const ResolvedConfig& c) {
  json j;
  for (const char* k : {"dim", "window", "negatives", "epochs", "lr", "min_count", "ngram_min", "ngram_max", "buckets",
                        "seed"})
    j[k] = c.at(std::string("skipgram.") + k);
  return emb::skipgram_config_from_json(j);
}

bool is_gbm(const ResolvedConfig& c) { return c.str("model.architecture") == "gbm"; }

models::ModelSpec model_spec(const ResolvedConfig& c, std::uint64_t seed) {
  models::ModelSpec s;
  models::set_model_name(s, c.str("model.architecture"));
  s.embedding_dim = c.uint("model.embedding_dim");
  s.hidden = c.uint("model.hidden");
  s.mlp = c.list<std::size_t>("model.mlp");
  s.dropout = c.num("model.dropout");
  s.train_embeddings = c.flag("model.train_embeddings");
  s.kb_lambda = c.num("model.kb_lambda");
  s.seed = seed;
  models::validate(s);
  return s;
}

harness::TrainConfig train_config(const ResolvedConfig& c, std::uint64_t seed, const onto::ConceptGraph* graph) {
  harness::TrainConfig t;
  t.max_epochs = c.uint("training.max_epochs");
  t.patience = c.uint("training.patience");
  t.batch_size = c.uint("training.batch_size");
  t.adam.lr = c.num("training.lr");
  t.seed = seed;
  t.graph = graph;
  harness::validate(t);
  return t;
}

models::GbmConfig gbm_config(const ResolvedConfig& c, std::uint64_t seed) {
  models::GbmConfig g;
  g.rounds = c.uint("gbm.rounds");
  g.max_depth = c.uint("gbm.max_depth");
  g.learning_rate = c.num("gbm.learning_rate");
  g.min_samples_leaf = c.uint("gbm.min_samples_leaf");
  g.seed = seed;
  if (!(g.learning_rate > 0)) throw ConfigError("gbm.learning_rate", "must be > 0");
  if (g.min_samples_leaf < 1) throw ConfigError("gbm.min_samples_leaf", "must be >= 1");
  return g;
}

std::optional<emb::EmbeddingMatrix> load_vectors(const ResolvedConfig& c) {
  const std::string path = c.str("embeddings.vectors");
  if (path.empty()) return std::nullopt;
  return emb::read_vectors(fs::path(path));
}

onto::ConceptGraph load_graph(const ResolvedConfig& c) {
  const std::string spec = c.str("kb.graph");
  if (spec.empty()) return {};
  return onto::load_graph_spec(spec);
}

const KeySpec kGraphKey{"kb.graph", "demo",
                        "Ontology: demo (bundled), a JSON-lines graph file, or concepts.tsv,edges.tsv."};
const KeySpec kVectorsKey{"embeddings.vectors", "", "Pretrained text-format vectors; empty for random initialisation."};

std::vector<KeySpec> join(std::initializer_list<std::vector<KeySpec>> groups) {
  std::vector<KeySpec> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

json pair_tokens_json(const std::vector<onto::ConceptMatch>& matches) {
  json out = json::array();
  for (const auto& m : matches)
    out.push_back({{"start", m.start}, {"end", m.end}, {"concept_id", m.concept_id}, {"surface", data::join_tokens(m.surface)}});
  return out;
}

std::vector<data::NliPair> read_pairs(const RunContext& ctx, const std::string& key) {
  auto r = data::read_jsonl(fs::path(require_path(ctx.config, key)));
  if (r.skipped_unlabeled) ctx.log << key << ": skipped " << r.skipped_unlabeled << " records without a gold label\n";
  return std::move(r.split.pairs);
}

// ---------------------------------------------------------- model bundles

// Feature-based baseline saved as one JSON document: the boosted trees plus
// the idf table and the embedding/graph sources its features were built from.
json gbm_bundle(const models::GbmModel& gbm, const models::IdfTable& idf, const std::string& vectors,
                const std::string& graph) {
  json j = models::gbm_to_json(gbm);
  j["idf"] = {{"documents", idf.documents()}, {"df", idf.document_frequency()}};
  j["embeddings"] = vectors;
  j["graph"] = graph;
  return j;
}

struct LoadedModel {
  std::optional<models::NliModel> neural;
  std::optional<models::GbmModel> gbm;
  std::optional<models::FeatureExtractor> features;
  std::optional<emb::EmbeddingMatrix> vectors;
  std::unique_ptr<onto::ConceptGraph> graph;
  std::string name;
};

bool is_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char c = 0;
  in >> c;
  return c == '{';
}

std::unique_ptr<LoadedModel> load_model(const fs::path& path, const std::string& graph_spec) {
  auto m = std::make_unique<LoadedModel>();
  if (is_json_file(path)) {
    json j = json::parse(read_text(path));
    m->gbm = models::gbm_from_json(j);
    const std::string vectors = j.value("embeddings", "");
    if (!vectors.empty()) m->vectors = emb::read_vectors(fs::path(vectors));
    const std::string g = j.value("graph", "");
    m->graph = std::make_unique<onto::ConceptGraph>(g.empty() ? onto::ConceptGraph{} : onto::load_graph_spec(g));
    m->features.emplace(m->vectors ? &*m->vectors : nullptr, m->graph.get(),
                        models::IdfTable::from_counts(j.at("idf").at("documents").get<std::size_t>(),
                                                      j.at("idf").at("df").get<std::map<std::string, std::size_t>>()));
    m->name = "gbm";
  } else {
    m->neural.emplace(models::NliModel::load(path));
    m->name = models::model_name(m->neural->spec());
    if (m->neural->spec().kb_attention)
      m->graph = std::make_unique<onto::ConceptGraph>(onto::load_graph_spec(graph_spec.empty() ? "demo" : graph_spec));
  }
  return m;
}

std::vector<models::Prediction> predict(const LoadedModel& m, const std::vector<data::NliPair>& pairs,
                                        std::string head) {
  if (m.gbm) {
    std::vector<models::Prediction> out;
    for (const auto& p : pairs) out.push_back(models::gbm_predict(*m.gbm, m.features->extract(p)));
    return out;
  }
  if (head.empty()) head = m.neural->has_head("target") ? "target" : m.neural->heads().front();
  return harness::predict_pairs(*m.neural, pairs, head, m.graph.get());
}

harness::Metrics metrics_for(const std::vector<data::NliPair>& pairs, const std::vector<models::Prediction>& preds) {
  std::vector<data::Label> gold, predicted;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    gold.push_back(pairs[i].label);
    predicted.push_back(preds[i].label);
  }
  return harness::compute_metrics(gold, predicted);
}

std::string predictions_jsonl(const std::vector<data::NliPair>& pairs, const std::vector<models::Prediction>& preds) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    json probs = json::object();
    for (auto l : data::kLabels)
      probs[std::string(data::label_name(l))] = preds[i].probs[static_cast<std::size_t>(data::label_index(l))];
    out += json{{"pairID", pairs[i].pair_id},
                {"gold_label", data::label_name(pairs[i].label)},
                {"predicted", data::label_name(preds[i].label)},
                {"probs", probs}}
               .dump() +
           "\n";
  }
  return out;
}

// ------------------------------------------------------------ data stages

void run_data_segment(const RunContext& ctx) {
  const auto& c = ctx.config;
  const std::string alias_path = c.str("aliases");
  const auto aliases = alias_path.empty() ? data::SectionAliases::builtin() : data::SectionAliases::load(alias_path);
  const auto inputs = c.list<std::string>("inputs");
  if (inputs.empty()) throw ConfigError("inputs", "list at least one note file");
  std::string out;
  std::size_t count = 0;
  for (const auto& path : inputs) {
    const std::string id = fs::path(path).stem().string();
    for (const auto& s : data::segment_note_sections(read_text(path), aliases, id)) {
      out += json{{"note_id", s.note_id}, {"section", s.header}, {"raw_header", s.raw_header}, {"body", s.body}}.dump() +
             "\n";
      ++count;
    }
  }
  write_text(ctx.out_dir / "sections.jsonl", out);
  ctx.log << "wrote " << count << " sections from " << inputs.size() << " notes\n";
}

void run_data_split_sentences(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto keep = c.list<std::string>("sections");
  data::SentenceSplitOptions opts;
  opts.abbreviations = c.list<std::string>("abbreviations");
  const std::size_t min_tokens = c.uint("min_tokens");
  std::istringstream in(read_text(require_path(c, "input")));
  std::string line, out;
  std::size_t line_no = 0, count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("body")) throw ParseError("expected a section record with a body", line_no);
    const std::string section = j.value("section", "");
    if (!keep.empty() && std::find(keep.begin(), keep.end(), section) == keep.end()) continue;
    for (const auto& s : data::split_sentences(j["body"].get<std::string>(), opts)) {
      if (data::tokenize(s).size() < min_tokens) continue;
      out += s + "\n";
      ++count;
    }
  }
  write_text(ctx.out_dir / "sentences.txt", out);
  ctx.log << "wrote " << count << " sentences\n";
}

void run_data_sample_prompts(const RunContext& ctx) {
  const auto& c = ctx.config;
  std::vector<std::string> sentences;
  std::istringstream in(read_text(require_path(c, "input")));
  for (std::string line; std::getline(in, line);)
    if (line.find_first_not_of(" \t\r") != std::string::npos) sentences.push_back(line);
  auto batch = data::prepare_annotation_batch(sentences, c.uint("n"), c.uint("seed"));
  std::string premises;
  for (const auto& p : batch.premises) premises += json{{"premise_id", p.premise_id}, {"premise", p.text}}.dump() + "\n";
  write_text(ctx.out_dir / "prompts.txt", batch.prompt_text);
  write_text(ctx.out_dir / "premises.jsonl", premises);
  ctx.log << "sampled " << batch.premises.size() << " of " << sentences.size() << " sentences\n";
}

void run_data_ingest(const RunContext& ctx) {
  const auto& c = ctx.config;
  std::map<std::string, std::string> premises;
  if (!c.str("premises").empty()) {
    std::istringstream in(read_text(c.str("premises")));
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("premise_id") || !j.contains("premise"))
        throw ParseError("premises file needs premise_id and premise", line_no);
      premises[j["premise_id"].get<std::string>()] = j["premise"].get<std::string>();
    }
  }
  const auto records = data::read_annotation_records(require_path(c, "input"), premises);
  const auto result = data::ingest_annotations(records);
  data::write_jsonl(ctx.out_dir / "pairs.jsonl", data::DatasetSplit{data::SplitName::train, result.pairs});
  std::string discards;
  for (const auto& d : result.discarded) discards += json{{"premise_id", d.premise_id}, {"reason", d.reason}}.dump() + "\n";
  write_text(ctx.out_dir / "discarded.jsonl", discards);
  const auto [intended, judged] = data::agreement_labels(records);
  json agreement{{"judged_hypotheses", intended.size()}, {"kappa", nullptr}};
  if (!intended.empty()) agreement["kappa"] = data::cohens_kappa(intended, judged);
  write_json(ctx.out_dir / "agreement.json", agreement);
  ctx.log << "kept " << result.pairs.size() << " pairs, discarded " << result.discarded.size() << " records\n";
}

void run_data_stats(const RunContext& ctx) {
  const auto& c = ctx.config;
  data::Dataset ds;
  json skipped = json::object();
  for (auto [name, split] : {std::pair{data::SplitName::train, &ds.train}, std::pair{data::SplitName::dev, &ds.dev},
                             std::pair{data::SplitName::test, &ds.test}}) {
    const std::string key(data::split_name(name));
    if (c.str(key).empty()) continue;
    auto r = data::read_jsonl(fs::path(c.str(key)), name);
    skipped[key] = r.skipped_unlabeled;
    *split = std::move(r.split);
  }
  data::StatsOptions opts;
  opts.histogram_edges = c.list<std::size_t>("histogram_edges");
  json report = data::stats_to_json(data::dataset_stats(ds, opts));
  report["skipped_unlabeled"] = skipped;
  write_json(ctx.out_dir / "stats.json", report);
  ctx.log << "pairs: train " << ds.train.pairs.size() << ", dev " << ds.dev.pairs.size() << ", test "
          << ds.test.pairs.size() << "\n";
}

void write_dataset(const fs::path& dir, const data::Dataset& ds) {
  data::write_jsonl(dir / "train.jsonl", ds.train);
  data::write_jsonl(dir / "dev.jsonl", ds.dev);
  data::write_jsonl(dir / "test.jsonl", ds.test);
}

void run_data_synth(const RunContext& ctx) {
  const auto& c = ctx.config;
  data::SyntheticSpec spec;
  spec.domain = data::DomainProfile::by_name(c.str("domain"));
  spec.planted_artifacts = c.flag("planted");
  const auto sizes = c.list<std::size_t>("sizes");
  if (sizes.size() != 3) throw ConfigError("sizes", "needs three entries");
  spec.sizes = {sizes[0], sizes[1], sizes[2]};
  write_dataset(ctx.out_dir, data::generate_synthetic_dataset(spec, c.uint("seed")));
}

void run_data_split(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto ratios = c.list<double>("ratios");
  if (ratios.size() != 3) throw ConfigError("ratios", "needs three entries");
  auto pairs = read_pairs(ctx, "input");
  auto ds = data::split_by_premise(pairs, {ratios[0], ratios[1], ratios[2]}, c.uint("seed"));
  write_dataset(ctx.out_dir, ds);
  ctx.log << "split " << pairs.size() << " pairs into " << ds.train.pairs.size() << "/" << ds.dev.pairs.size() << "/"
          << ds.test.pairs.size() << "\n";
}

// ------------------------------------------------------- embedding stages

void write_embedding_outputs(const RunContext& ctx, const emb::SkipgramResult& r) {
  emb::WriteVectorsOptions opts;
  opts.precision = static_cast<int>(ctx.config.uint("precision"));
  emb::write_vectors(ctx.out_dir / "vectors.txt", r.matrix, opts);
  write_json(ctx.out_dir / "training.json",
             {{"provenance", r.matrix.provenance()}, {"tokens", r.matrix.size()}, {"epoch_loss", r.epoch_loss}});
}

void run_embed_train(const RunContext& ctx) {
  auto corpus = emb::read_corpus(require_path(ctx.config, "corpus"));
  auto r = emb::train_subword_skipgram(corpus, skipgram_config(ctx.config));
  write_embedding_outputs(ctx, r);
  ctx.log << "trained " << r.matrix.size() << " vectors\n";
}

void run_embed_finetune(const RunContext& ctx) {
  const auto& c = ctx.config;
  auto init = emb::read_vectors(fs::path(require_path(c, "init")));
  if (!c.str("init_name").empty()) init.set_provenance(c.str("init_name"));
  std::vector<emb::NamedCorpus> chain;
  for (const auto& path : c.list<std::string>("corpora"))
    chain.push_back({fs::path(path).stem().string(), emb::read_corpus(path)});
  if (chain.empty()) throw ConfigError("corpora", "list at least one corpus");
  auto r = emb::fine_tune_chain(init, chain, skipgram_config(c));
  write_embedding_outputs(ctx, r);
  ctx.log << "fine-tuned chain " << r.matrix.provenance() << "\n";
}

void run_embed_retrofit(const RunContext& ctx) {
  const auto& c = ctx.config;
  auto vectors = emb::read_vectors(fs::path(require_path(c, "vectors")));
  const auto adjacency = c.str("adjacency").empty() ? onto::lexical_adjacency(load_graph(c))
                                                    : emb::read_adjacency(c.str("adjacency"));
  emb::RetrofitConfig rc;
  rc.alpha = c.num("alpha");
  rc.beta = c.num("beta");
  const std::string mode = c.str("beta_mode");
  if (mode == "uniform") rc.beta_mode = emb::BetaMode::uniform;
  else if (mode == "inverse_degree") rc.beta_mode = emb::BetaMode::inverse_degree;
  else throw ConfigError("beta_mode", "expected uniform or inverse_degree, got \"" + mode + "\"");
  rc.iterations = c.uint("iterations");
  auto r = emb::retrofit(vectors, adjacency, rc);
  emb::WriteVectorsOptions opts;
  opts.precision = static_cast<int>(c.uint("precision"));
  emb::write_vectors(ctx.out_dir / "vectors.txt", r.matrix, opts);
  emb::write_adjacency(ctx.out_dir / "adjacency.jsonl", adjacency);
  write_json(ctx.out_dir / "objective.json", {{"objective", r.objective}, {"edges", adjacency.edge_count()}});
  ctx.log << "retrofitted over " << adjacency.edge_count() << " edges\n";
}

// ------------------------------------------------------- ontology stages

void run_kb_match(const RunContext& ctx) {
  const auto graph = load_graph(ctx.config);
  const onto::ConceptMatcher matcher(graph);
  std::string out;
  for (const auto& p : read_pairs(ctx, "input"))
    out += json{{"pairID", p.pair_id},
                {"premise", pair_tokens_json(matcher.match(p.premise))},
                {"hypothesis", pair_tokens_json(matcher.match(p.hypothesis))}}
               .dump() +
           "\n";
  write_text(ctx.out_dir / "matches.jsonl", out);
}

void run_kb_paths(const RunContext& ctx) {
  const auto graph = load_graph(ctx.config);
  const onto::ConceptMatcher matcher(graph);
  onto::PathTable table(graph);
  std::string out;
  for (const auto& p : read_pairs(ctx, "input")) {
    json paths = json::array();
    json shortest = nullptr;
    for (const auto& a : matcher.match(p.premise))
      for (const auto& b : matcher.match(p.hypothesis)) {
        const auto d = table.distance(a.concept_index, b.concept_index);
        json len = d == onto::kUnreachable ? json(nullptr) : json(d);
        if (!len.is_null() && (shortest.is_null() || d < shortest.get<std::size_t>())) shortest = d;
        paths.push_back({{"premise_concept", a.concept_id}, {"hypothesis_concept", b.concept_id}, {"length", len}});
      }
    out += json{{"pairID", p.pair_id}, {"paths", paths}, {"shortest", shortest}}.dump() + "\n";
  }
  write_text(ctx.out_dir / "paths.jsonl", out);
}

void run_kb_histogram(const RunContext& ctx) {
  const auto graph = load_graph(ctx.config);
  const auto pairs = read_pairs(ctx, "input");
  const auto h = onto::path_histogram(pairs, graph, ctx.config.uint("cap"));
  json buckets = json::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::string label = i < h.cap ? std::to_string(i) : i == h.cap ? std::to_string(i) + "+" : "none";
    buckets.push_back({{"length", label}, {"count", h.counts[i]}});
  }
  write_json(ctx.out_dir / "histogram.json", {{"cap", h.cap}, {"pairs", pairs.size()}, {"buckets", buckets}});
}

// ------------------------------------------------------- training stages

struct TrainInputs {
  std::optional<emb::EmbeddingMatrix> vectors;
  onto::ConceptGraph graph;
};

harness::RunResult train_gbm_seed(const RunContext& ctx, const data::Dataset& ds, const TrainInputs& in,
                                  const std::string& experiment, std::uint64_t seed) {
  const auto& c = ctx.config;
  if (ds.train.pairs.empty() || ds.test.pairs.empty()) throw Error("gbm needs train and test pairs");
  const auto start = std::chrono::steady_clock::now();
  auto idf = models::IdfTable::build(ds.train.pairs);
  models::FeatureExtractor fx(in.vectors ? &*in.vectors : nullptr, &in.graph, idf);
  std::vector<data::Label> labels;
  for (const auto& p : ds.train.pairs) labels.push_back(p.label);
  auto gbm = models::gbm_train(fx.extract_all(ds.train.pairs), labels, gbm_config(c, seed));
  harness::RunResult r;
  r.experiment = experiment;
  r.model = "gbm";
  r.seed = seed;
  auto eval = [&](const std::vector<data::NliPair>& pairs) {
    std::vector<models::Prediction> preds;
    for (const auto& p : pairs) preds.push_back(models::gbm_predict(gbm, fx.extract(p)));
    return metrics_for(pairs, preds);
  };
  if (!ds.dev.pairs.empty()) r.dev = eval(ds.dev.pairs);
  r.test = eval(ds.test.pairs);
  const auto ckpt = harness::checkpoint_path(ctx.out_dir, experiment, seed);
  write_json(ckpt, gbm_bundle(gbm, idf, c.str("embeddings.vectors"), c.str("kb.graph")));
  r.checkpoint = fs::relative(ckpt, ctx.out_dir).string();
  r.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

harness::RunResult train_neural_seed(const RunContext& ctx, const data::Dataset& source, const data::Dataset& target,
                                     harness::TransferMode mode, const TrainInputs& in, const std::string& experiment,
                                     std::uint64_t seed, bool carry) {
  harness::TransferOptions o;
  o.mode = mode;
  o.spec = model_spec(ctx.config, seed);
  o.train = train_config(ctx.config, seed, &in.graph);
  o.pretrained = in.vectors ? &*in.vectors : nullptr;
  o.carry_optimizer_state = carry;
  auto out = harness::run_transfer(source, target, o);
  const auto ckpt = harness::checkpoint_path(ctx.out_dir, experiment, seed);
  out.model->save(ckpt);
  out.result.experiment = experiment;
  out.result.checkpoint = fs::relative(ckpt, ctx.out_dir).string();
  return out.result;
}

void finish_report(const RunContext& ctx, const std::string& experiment, const std::string& source_domain,
                   std::vector<harness::RunResult> runs) {
  for (const auto& r : runs) {
    write_json(ctx.out_dir / experiment / std::to_string(r.seed) / "metrics.json", harness::run_result_to_json(r));
    write_json(ctx.out_dir / experiment / std::to_string(r.seed) / "timing.json",
               {{"wall_time_seconds", r.wall_time_seconds}});
    ctx.log << experiment << " seed " << r.seed << ": best epoch " << r.best_epoch << ", dev "
            << (r.dev.n ? std::to_string(r.dev.accuracy) : "-") << ", test " << r.test.accuracy << " ("
            << r.wall_time_seconds << " s)\n";
  }
  auto report = harness::aggregate_runs(experiment, source_domain, std::move(runs));
  write_json(ctx.out_dir / experiment / "report.json", harness::seed_report_to_json(report));
  ctx.log << experiment << ": test accuracy " << report.test_accuracy.mean << " +- " << report.test_accuracy.stddev
          << " over " << report.test_accuracy.n << " seeds\n";
}

TrainInputs train_inputs(const ResolvedConfig& c) {
  TrainInputs in;
  in.vectors = load_vectors(c);
  in.graph = load_graph(c);
  return in;
}

std::vector<std::uint64_t> seeds_of(const ResolvedConfig& c) {
  auto seeds = c.list<std::uint64_t>("seeds");
  if (seeds.empty()) throw ConfigError("seeds", "list at least one seed");
  return seeds;
}

void run_train(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto ds = load_dataset(ctx, "data");
  const auto in = train_inputs(c);
  const std::string experiment = c.str("experiment");
  if (!is_gbm(c)) model_spec(c, 0);
  auto runs = harness::run_seeds(
      seeds_of(c),
      [&](std::uint64_t seed) {
        return is_gbm(c) ? train_gbm_seed(ctx, ds, in, experiment, seed)
                         : train_neural_seed(ctx, {}, ds, harness::TransferMode::none, in, experiment, seed, false);
      },
      c.uint("jobs"));
  finish_report(ctx, experiment, "none", std::move(runs));
}

void run_transfer_cmd(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto mode = harness::parse_transfer_mode(c.str("mode"));
  const auto source = load_dataset(ctx, "source");
  const auto target = load_dataset(ctx, "target");
  const auto in = train_inputs(c);
  const std::string experiment = c.str("experiment");
  model_spec(c, 0);
  auto runs = harness::run_seeds(
      seeds_of(c),
      [&](std::uint64_t seed) {
        return train_neural_seed(ctx, source, target, mode, in, experiment, seed, c.flag("carry_optimizer_state"));
      },
      c.uint("jobs"));
  finish_report(ctx, experiment, mode == harness::TransferMode::none ? "none" : domain_name(c, "source"),
                std::move(runs));
}

void run_probe(const RunContext& ctx) {
  const auto& c = ctx.config;
  auto ds = load_dataset(ctx, "data");
  ds.train.pairs = harness::hypothesis_only(ds.train.pairs);
  ds.dev.pairs = harness::hypothesis_only(ds.dev.pairs);
  ds.test.pairs = harness::hypothesis_only(ds.test.pairs);
  const auto in = train_inputs(c);
  const std::string experiment = c.str("experiment");
  model_spec(c, 0);
  auto runs = harness::run_seeds(
      seeds_of(c),
      [&](std::uint64_t seed) {
        auto r = train_neural_seed(ctx, {}, ds, harness::TransferMode::none, in, experiment, seed, false);
        r.transfer_mode = "hypothesis-only";
        return r;
      },
      c.uint("jobs"));
  finish_report(ctx, experiment, "none", std::move(runs));
}

void run_eval(const RunContext& ctx) {
  const auto& c = ctx.config;
  auto model = load_model(require_path(c, "checkpoint"), c.str("kb.graph"));
  const auto pairs = read_pairs(ctx, "data");
  const auto preds = predict(*model, pairs, c.str("head"));
  json metrics = harness::metrics_to_json(metrics_for(pairs, preds));
  metrics["model"] = model->name;
  write_json(ctx.out_dir / "metrics.json", metrics);
  write_text(ctx.out_dir / "predictions.jsonl", predictions_jsonl(pairs, preds));
  ctx.log << model->name << " accuracy " << metrics["accuracy"].get<double>() << " on " << pairs.size() << " pairs\n";
}

void run_ensemble(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto paths = c.list<std::string>("checkpoints");
  if (paths.empty()) throw ConfigError("checkpoints", "list at least one checkpoint");
  const auto pairs = read_pairs(ctx, "data");
  std::vector<std::vector<models::Prediction>> all;
  json members = json::array();
  for (const auto& p : paths) {
    auto model = load_model(p, c.str("kb.graph"));
    all.push_back(predict(*model, pairs, c.str("head")));
    members.push_back({{"checkpoint", p},
                       {"model", model->name},
                       {"accuracy", metrics_for(pairs, all.back()).accuracy}});
  }
  std::vector<models::Prediction> combined;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<models::Prediction> row;
    for (const auto& preds : all) row.push_back(preds[i]);
    combined.push_back(harness::ensemble_predict(row));
  }
  json metrics = harness::metrics_to_json(metrics_for(pairs, combined));
  metrics["members"] = members;
  write_json(ctx.out_dir / "metrics.json", metrics);
  write_text(ctx.out_dir / "predictions.jsonl", predictions_jsonl(pairs, combined));
  ctx.log << "ensemble of " << paths.size() << " accuracy " << metrics["accuracy"].get<double>() << "\n";
}

void run_report_gains(const RunContext& ctx) {
  const auto& c = ctx.config;
  std::vector<harness::SeedReport> reports;
  for (const auto& p : c.list<std::string>("reports")) reports.push_back(harness::seed_report_from_json(json::parse(read_text(p))));
  if (reports.empty()) throw ConfigError("reports", "list at least one report.json");
  const std::string baseline = c.str("baseline");
  if (baseline.empty()) throw ConfigError("baseline", "name the baseline experiment");
  write_text(ctx.out_dir / "gains.csv", harness::gains_csv(harness::gain_table(reports, baseline)));
}

void run_grad_check(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto graph = onto::demo_graph();
  const std::size_t instances = c.uint("instances");
  const double tolerance = c.num("tolerance");
  data::SyntheticSpec synth;
  synth.sizes = {30, 3, 3};
  const auto pool = data::generate_synthetic_dataset(synth, c.uint("seed")).train.pairs;
  std::mt19937_64 rng(c.uint("seed"));
  json report = json::object();
  bool ok = true;
  for (const auto& name : c.list<std::string>("architectures")) {
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      std::vector<data::NliPair> pairs{pool[pick(rng)], pool[pick(rng)]};
      // Short sentences keep the finite-difference sweep cheap.
      for (auto& p : pairs) {
        p.premise.resize(std::min<std::size_t>(p.premise.size(), 3));
        p.hypothesis.resize(std::min<std::size_t>(p.hypothesis.size(), 3));
      }
      data::Vocabulary vocab;
      for (const auto& p : pairs) {
        for (const auto& t : p.premise) vocab.add(t);
        for (const auto& t : p.hypothesis) vocab.add(t);
      }
      models::ModelSpec spec;
      models::set_model_name(spec, name);
      spec.embedding_dim = c.uint("embedding_dim");
      spec.hidden = c.uint("hidden");
      spec.mlp = {c.uint("hidden")};
      spec.seed = rng();
      models::NliModel model(spec, vocab);
      std::vector<const data::NliPair*> ptrs{&pairs[0], &pairs[1]};
      auto batch = data::make_batch(ptrs, vocab);
      if (spec.kb_attention) onto::attach_kb_attention(batch, graph, spec.kb_lambda);
      ad::GradCheckOptions opts;
      opts.tolerance = tolerance;
      auto r = ad::grad_check([&](ad::Tape& t) { return model.loss(t, batch, "main"); }, model.params(), opts);
      worst = std::max(worst, r.max_rel_error);
    }
    const bool passed = worst < tolerance;
    ok = ok && passed;
    report[name] = {{"instances", instances}, {"max_rel_error", worst}, {"passed", passed}};
    ctx.log << name << ": max relative error " << worst << (passed ? " ok" : " FAILED") << "\n";
  }
  write_json(ctx.out_dir / "gradcheck.json", report);
  if (!ok) throw NumericError("gradient check exceeded tolerance " + std::to_string(tolerance));
}

std::vector<Command> build_commands() {
  const json all_seeds = json::array({1, 2, 3, 4, 5, 6});
  const KeySpec seeds{"seeds", all_seeds, "One run per seed; the report averages them."};
  const KeySpec jobs{"jobs", 1u, "Seeds trained concurrently."};
  const KeySpec experiment{"experiment", "experiment", "Run name; checkpoints go to <out>/<experiment>/<seed>/best.ckpt."};
  const std::vector<std::string> run_artifacts{"<experiment>/<seed>/best.ckpt (+ .manifest.json for neural models)",
                                               "<experiment>/<seed>/metrics.json", "<experiment>/<seed>/timing.json",
                                               "<experiment>/report.json"};
  std::vector<Command> cmds;
  cmds.push_back({"data-segment", "Split clinical notes into canonical sections.",
                  "premise extraction from notes (section segmentation)",
                  {{"inputs", json::array(), "Note text files, one note per file; the file stem is the note id."},
                   {"aliases", "", "Header alias TSV (alias<TAB>canonical); empty for the bundled list."}},
                  {"sections.jsonl"},
                  run_data_segment});
  cmds.push_back({"data-split-sentences", "Split section bodies into sentences.",
                  "premise extraction from notes (sentence boundaries)",
                  {{"input", "", "sections.jsonl from data-segment."},
                   {"sections", json::array(), "Canonical sections to keep; empty keeps all."},
                   {"abbreviations", data::SentenceSplitOptions{}.abbreviations,
                    "Lowercase words after which a period never ends a sentence."},
                   {"min_tokens", 1u, "Drop sentences with fewer tokens."}},
                  {"sentences.txt"},
                  run_data_split_sentences});
  cmds.push_back({"data-sample-prompts", "Sample premises and write annotation prompts.", "annotation prompt batches",
                  {{"input", "", "Candidate sentences, one per line."},
                   {"n", 10u, "Premises to sample without replacement."},
                   {"seed", 1u, "Sampling seed."}},
                  {"prompts.txt", "premises.jsonl"},
                  run_data_sample_prompts});
  cmds.push_back({"data-ingest", "Turn returned annotations into pairs and measure agreement.",
                  "pair construction and inter-annotator agreement (Cohen's kappa)",
                  {{"input", "", "Annotation return file, JSON lines."},
                   {"premises", "", "premises.jsonl supplying premise text by premise_id."}},
                  {"pairs.jsonl", "discarded.jsonl", "agreement.json"},
                  run_data_ingest});
  cmds.push_back({"data-stats", "Pair counts, sentence lengths and length histograms.",
                  "dataset statistics table and sentence-length distributions",
                  {{"train", "", "Train split JSON lines."},
                   {"dev", "", "Dev split JSON lines."},
                   {"test", "", "Test split JSON lines."},
                   {"histogram_edges", data::StatsOptions{}.histogram_edges, "Left edges of the length buckets."}},
                  {"stats.json"},
                  run_data_stats});
  cmds.push_back({"data-synth", "Generate a synthetic NLI dataset.", "none (synthetic stand-in corpus)",
                  {{"domain", "clinical", "clinical or general."},
                   {"planted", false, "Make the hypothesis alone reveal the label."},
                   {"sizes", json::array({96, 24, 24}), "Pairs per split (train, dev, test)."},
                   {"seed", 1u, "Generator seed."}},
                  {"train.jsonl", "dev.jsonl", "test.jsonl"},
                  run_data_synth});
  cmds.push_back({"data-split", "Partition pairs into splits that share no premise.",
                  "premise-disjoint train/dev/test partition",
                  {{"input", "", "Pairs, JSON lines."},
                   {"ratios", json::array({0.8, 0.1, 0.1}), "Train/dev/test fractions summing to 1."},
                   {"seed", 1u, "Shuffle seed."}},
                  {"train.jsonl", "dev.jsonl", "test.jsonl"},
                  run_data_split});
  cmds.push_back({"embed-train", "Train subword skip-gram vectors on a corpus.", "domain-specific word embeddings",
                  join({{{"corpus", "", "Text corpus, one sentence per line."},
                         {"precision", 17u, "Significant digits written per value."}},
                        skipgram_keys()}),
                  {"vectors.txt", "training.json"},
                  run_embed_train});
  cmds.push_back({"embed-finetune", "Continue training vectors on a chain of corpora.",
                  "embedding fine-tune chains",
                  join({{{"init", "", "Starting vectors, text format."},
                         {"init_name", "", "Provenance label of the starting vectors; defaults to the file's own."},
                         {"corpora", json::array(), "Corpora trained on in order; file stems name the chain."},
                         {"precision", 17u, "Significant digits written per value."}},
                        skipgram_keys()}),
                  {"vectors.txt", "training.json"},
                  run_embed_finetune});
  cmds.push_back({"embed-retrofit", "Pull vectors of ontology-linked tokens together.",
                  "retrofitted embedding rows",
                  {{"vectors", "", "Vectors to retrofit, text format."},
                   {"adjacency", "", "Lexical adjacency JSON lines; empty derives it from kb.graph."},
                   kGraphKey,
                   {"alpha", 1.0, "Weight anchoring each vector to its original."},
                   {"beta", 1.0, "Weight of each neighbor edge."},
                   {"beta_mode", "uniform", "uniform or inverse_degree (beta divided by the neighbor count)."},
                   {"iterations", 10u, "Sweeps over the vocabulary."},
                   {"precision", 17u, "Significant digits written per value."}},
                  {"vectors.txt", "adjacency.jsonl", "objective.json"},
                  run_embed_retrofit});
  cmds.push_back({"kb-match", "Tag ontology concepts in premises and hypotheses.", "concept tagging",
                  {{"input", "", "Pairs, JSON lines."}, kGraphKey},
                  {"matches.jsonl"},
                  run_kb_match});
  cmds.push_back({"kb-paths", "Shortest paths between premise and hypothesis concepts.",
                  "path lengths behind knowledge-directed attention",
                  {{"input", "", "Pairs, JSON lines."}, kGraphKey},
                  {"paths.jsonl"},
                  run_kb_paths});
  cmds.push_back({"kb-histogram", "Histogram of minimum concept path length per pair.",
                  "shortest-path length histogram between premise and hypothesis concepts",
                  {{"input", "", "Pairs, JSON lines."},
                   kGraphKey,
                   {"cap", static_cast<std::size_t>(onto::kDefaultPathCap), "Longer paths count in the cap bucket."}},
                  {"histogram.json"},
                  run_kb_histogram});
  cmds.push_back({"train", "Train a model on one dataset over several seeds.",
                  "baseline accuracy table (feature-based, BOW, InferSent, ESIM) and knowledge-directed attention rows",
                  join({{experiment, seeds, jobs, kVectorsKey, kGraphKey}, model_keys(true), training_keys(), gbm_keys(),
                        data_keys("data", false)}),
                  run_artifacts,
                  run_train});
  cmds.push_back({"transfer", "Transfer from a source domain to a target domain.",
                  "transfer-learning gain tables (direct, sequential, multi-target)",
                  join({{experiment, seeds, jobs, kVectorsKey, kGraphKey,
                         {"mode", "sequential", "none, direct, sequential or multi-target."},
                         {"carry_optimizer_state", false, "Keep Adam moments when fine-tuning on the target."}},
                        model_keys(false), training_keys(), data_keys("source", true), data_keys("target", true)}),
                  run_artifacts,
                  run_transfer_cmd});
  cmds.push_back({"eval", "Evaluate a saved model on a dataset.", "accuracy and confusion matrix of one model",
                  {{"checkpoint", "", "best.ckpt written by train or transfer."},
                   {"data", "", "Pairs, JSON lines."},
                   {"head", "", "Classifier head; empty picks target when present, else the first."},
                   kGraphKey},
                  {"metrics.json", "predictions.jsonl"},
                  run_eval});
  cmds.push_back({"ensemble", "Sum the predicted distributions of several models.",
                  "ensemble of runs (summed predictions)",
                  {{"checkpoints", json::array(), "Saved models to combine."},
                   {"data", "", "Pairs, JSON lines."},
                   {"head", "", "Classifier head of neural members; empty picks target when present, else the first."},
                   kGraphKey},
                  {"metrics.json", "predictions.jsonl"},
                  run_ensemble});
  cmds.push_back({"probe-hypothesis-only", "Train with every premise replaced by one placeholder token.",
                  "hypothesis-only (premise-oblivious) baseline",
                  join({{experiment, seeds, jobs, kVectorsKey, kGraphKey}, model_keys(false), training_keys(),
                        data_keys("data", false)}),
                  run_artifacts,
                  run_probe});
  cmds.push_back({"report-gains", "Accuracy gains of several reports against a baseline.",
                  "absolute-gain tables against an in-domain baseline",
                  {{"reports", json::array(), "report.json files from train, transfer or probe runs."},
                   {"baseline", "", "Experiment name of the baseline report."}},
                  {"gains.csv"},
                  run_report_gains});
  cmds.push_back({"grad-check", "Compare analytic and finite-difference gradients of every architecture.",
                  "none (gradient verification)",
                  {{"architectures", json::array({"bow", "infersent", "esim", "infersent-kb", "esim-kb"}),
                    "Architectures to check."},
                   {"instances", 20u, "Random tiny instances per architecture."},
                   {"embedding_dim", 3u, "Word vector size of the test models."},
                   {"hidden", 4u, "Hidden size of the test models."},
                   {"tolerance", 1e-4, "Maximum relative error."},
                   {"seed", 1u, "Seed for instances and parameters."}},
                  {"gradcheck.json"},
                  run_grad_check});
  return cmds;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> cmds = build_commands();
  return cmds;
}

const Command* find_command(std::string_view name) {
  for (const auto& c : commands())
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace clinli::cli
