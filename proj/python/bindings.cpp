#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "clinli/cli/cli.hpp"
#include "clinli/data/annotation.hpp"
#include "clinli/data/dataset_io.hpp"
#include "clinli/data/synthetic.hpp"
#include "clinli/data/text.hpp"
#include "clinli/embeddings/retrofit.hpp"
#include "clinli/embeddings/vectors_io.hpp"
#include "clinli/error.hpp"
#include "clinli/harness/training.hpp"
#include "clinli/models/features.hpp"
#include "clinli/ontology/kb.hpp"

namespace py = pybind11;
using namespace clinli;

namespace {

data::Label to_label(const std::string& name) {
  auto l = data::parse_label(name);
  if (!l) throw ConfigError("label", "unknown label \"" + name + "\"");
  return *l;
}

std::vector<data::Label> to_labels(const std::vector<std::string>& names) {
  std::vector<data::Label> out;
  for (const auto& n : names) out.push_back(to_label(n));
  return out;
}

py::dict prediction_dict(const models::Prediction& p) {
  py::dict probs;
  for (auto l : data::kLabels) probs[py::str(std::string(data::label_name(l)))] = p.probs[data::label_index(l)];
  py::dict d;
  d["label"] = std::string(data::label_name(p.label));
  d["probs"] = probs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Clinical NLI toolkit: data preparation, ontology paths, embeddings and models.";

  static py::exception<Error> error(m, "Error");
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  static py::exception<ShapeError> shape_error(m, "ShapeError", error.ptr());
  static py::exception<NumericError> numeric_error(m, "NumericError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const ParseError& e) {
      parse_error(e.what());
    } catch (const ShapeError& e) {
      shape_error(e.what());
    } catch (const NumericError& e) {
      numeric_error(e.what());
    } catch (const Error& e) {
      error(e.what());
    }
  });

  // ------------------------------------------------------------------ data
  py::class_<data::NliPair>(m, "NliPair")
      .def(py::init([](std::string pair_id, data::Tokens premise, data::Tokens hypothesis, const std::string& label) {
             return data::NliPair{std::move(pair_id), std::move(premise), std::move(hypothesis), to_label(label)};
           }),
           py::arg("pair_id"), py::arg("premise"), py::arg("hypothesis"), py::arg("label"))
      .def_readwrite("pair_id", &data::NliPair::pair_id)
      .def_readwrite("premise", &data::NliPair::premise)
      .def_readwrite("hypothesis", &data::NliPair::hypothesis)
      .def_property(
          "label", [](const data::NliPair& p) { return std::string(data::label_name(p.label)); },
          [](data::NliPair& p, const std::string& l) { p.label = to_label(l); })
      .def("__eq__", [](const data::NliPair& a, const data::NliPair& b) { return a == b; })
      .def("__repr__", [](const data::NliPair& p) {
        return "NliPair(" + p.pair_id + ", " + std::string(data::label_name(p.label)) + ")";
      });

  m.def("tokenize", py::overload_cast<std::string_view>(&data::tokenize), py::arg("text"));
  m.def(
      "split_sentences",
      [](const std::string& body, std::optional<std::vector<std::string>> abbreviations) {
        data::SentenceSplitOptions o;
        if (abbreviations) o.abbreviations = *abbreviations;
        return data::split_sentences(body, o);
      },
      py::arg("body"), py::arg("abbreviations") = py::none());
  m.def(
      "segment_note",
      [](const std::string& note, const std::string& note_id) {
        py::list out;
        for (const auto& s : data::segment_note_sections(note, data::SectionAliases::builtin(), note_id)) {
          py::dict d;
          d["section"] = s.header;
          d["raw_header"] = s.raw_header;
          d["body"] = s.body;
          d["note_id"] = s.note_id;
          out.append(d);
        }
        return out;
      },
      py::arg("note"), py::arg("note_id") = "");
  m.def(
      "read_jsonl",
      [](const std::filesystem::path& path) {
        auto r = data::read_jsonl(path);
        return py::make_tuple(r.split.pairs, r.skipped_unlabeled);
      },
      py::arg("path"), "Returns (pairs, skipped_unlabeled).");
  m.def(
      "write_jsonl",
      [](const std::filesystem::path& path, const std::vector<data::NliPair>& pairs) {
        data::write_jsonl(path, data::DatasetSplit{data::SplitName::train, pairs});
      },
      py::arg("path"), py::arg("pairs"));
  m.def(
      "synthetic_dataset",
      [](const std::string& domain, bool planted, std::array<std::size_t, 3> sizes, std::uint64_t seed) {
        data::SyntheticSpec s;
        s.domain = data::DomainProfile::by_name(domain);
        s.planted_artifacts = planted;
        s.sizes = sizes;
        auto ds = data::generate_synthetic_dataset(s, seed);
        return py::make_tuple(ds.train.pairs, ds.dev.pairs, ds.test.pairs);
      },
      py::arg("domain") = "clinical", py::arg("planted") = false,
      py::arg("sizes") = std::array<std::size_t, 3>{96, 24, 24}, py::arg("seed") = 1,
      "Returns (train, dev, test) lists of NliPair.");
  m.def(
      "cohens_kappa",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        return data::cohens_kappa(to_labels(a), to_labels(b));
      },
      py::arg("labels_a"), py::arg("labels_b"));
  m.def("annotation_instructions", [] { return std::string(data::annotation_instructions()); });

  // -------------------------------------------------------------- ontology
  py::class_<onto::ConceptGraph>(m, "ConceptGraph")
      .def_static("demo", &onto::demo_graph)
      .def_static("load", &onto::load_graph_spec, py::arg("spec"),
                  "A .jsonl path, 'concepts.tsv,edges.tsv', or 'demo'.")
      .def("__len__", &onto::ConceptGraph::size)
      .def("concept_ids",
           [](const onto::ConceptGraph& g) {
             std::vector<std::string> ids;
             for (const auto& c : g.concepts()) ids.push_back(c.id);
             return ids;
           })
      .def("shortest_path", [](const onto::ConceptGraph& g, const std::string& a,
                               const std::string& b) { return onto::shortest_path_len(g, a, b); })
      .def(
          "match",
          [](const onto::ConceptGraph& g, const data::Tokens& tokens) {
            py::list out;
            for (const auto& mt : onto::match_concepts(tokens, g))
              out.append(py::make_tuple(mt.start, mt.end, mt.concept_id));
            return out;
          },
          py::arg("tokens"), "Longest-match concept spans as (start, end, concept_id).")
      .def(
          "kb_attention",
          [](const onto::ConceptGraph& g, const data::Tokens& p, const data::Tokens& h, double lambda) {
            auto a = onto::kb_attention(p, h, g, lambda);
            std::vector<std::vector<double>> ph(a.premise_len, std::vector<double>(a.hypothesis_len));
            std::vector<std::vector<double>> hp(a.hypothesis_len, std::vector<double>(a.premise_len));
            for (std::size_t i = 0; i < a.premise_len; ++i)
              for (std::size_t j = 0; j < a.hypothesis_len; ++j) {
                ph[i][j] = a.premise_to_hypothesis[i * a.hypothesis_len + j];
                hp[j][i] = a.hypothesis_to_premise[j * a.premise_len + i];
              }
            return py::make_tuple(ph, hp);
          },
          py::arg("premise"), py::arg("hypothesis"), py::arg("lam") = 1.0)
      .def(
          "path_histogram",
          [](const onto::ConceptGraph& g, const std::vector<data::NliPair>& pairs, std::size_t cap) {
            return onto::path_histogram(pairs, g, cap).counts;
          },
          py::arg("pairs"), py::arg("cap") = onto::kDefaultPathCap);

  // ------------------------------------------------------------ embeddings
  py::class_<emb::EmbeddingMatrix>(m, "Vectors")
      .def(py::init<std::size_t, std::string>(), py::arg("dim"), py::arg("provenance") = "")
      .def_static("read", py::overload_cast<const std::filesystem::path&>(&emb::read_vectors), py::arg("path"))
      .def(
          "write",
          [](const emb::EmbeddingMatrix& mat, const std::filesystem::path& path) { emb::write_vectors(path, mat); },
          py::arg("path"))
      .def("add", [](emb::EmbeddingMatrix& mat, const std::string& t,
                     const std::vector<double>& v) { mat.add(t, v); })
      .def("__len__", &emb::EmbeddingMatrix::size)
      .def("__contains__", [](const emb::EmbeddingMatrix& mat, const std::string& t) { return mat.contains(t); })
      .def("__getitem__",
           [](const emb::EmbeddingMatrix& mat, const std::string& t) {
             auto v = mat.vector(t);
             return std::vector<double>(v.begin(), v.end());
           })
      .def_property_readonly("dim", &emb::EmbeddingMatrix::dim)
      .def_property_readonly("provenance", &emb::EmbeddingMatrix::provenance)
      .def_property_readonly("tokens", &emb::EmbeddingMatrix::tokens);
  m.def(
      "retrofit",
      [](const emb::EmbeddingMatrix& mat, const std::vector<std::pair<std::string, std::string>>& edges, double alpha,
         double beta, std::size_t iterations) {
        emb::LexicalAdjacency adj;
        for (const auto& [a, b] : edges) adj.add_edge(a, b);
        auto r = emb::retrofit(mat, adj, {alpha, beta, emb::BetaMode::uniform, iterations});
        return py::make_tuple(std::move(r.matrix), r.objective);
      },
      py::arg("vectors"), py::arg("edges"), py::arg("alpha") = 1.0, py::arg("beta") = 1.0,
      py::arg("iterations") = 10, "Returns (vectors, objective per sweep).");

  // ---------------------------------------------------------------- models
  m.def("feature_names", [] {
    const auto& n = models::feature_names();
    return std::vector<std::string>(n.begin(), n.end());
  });
  m.def(
      "extract_features",
      [](const data::NliPair& pair, const std::vector<data::NliPair>& corpus, const onto::ConceptGraph* graph,
         const emb::EmbeddingMatrix* vectors) {
        auto idf = models::IdfTable::build(corpus.empty() ? std::vector<data::NliPair>{pair} : corpus);
        auto f = models::extract_features(pair, vectors, graph, idf);
        return std::vector<double>(f.begin(), f.end());
      },
      py::arg("pair"), py::arg("corpus") = std::vector<data::NliPair>{}, py::arg("graph") = nullptr,
      py::arg("vectors") = nullptr);
  m.def("bleu", &models::bleu, py::arg("candidate"), py::arg("reference"), py::arg("max_n") = 2);
  m.def("levenshtein", py::overload_cast<const std::string&, const std::string&>(&models::levenshtein));

  py::class_<models::NliModel>(m, "NliModel")
      .def_static("load", &models::NliModel::load, py::arg("path"))
      .def_property_readonly("architecture", [](const models::NliModel& x) { return models::model_name(x.spec()); })
      .def_property_readonly("heads", &models::NliModel::heads)
      .def(
          "predict",
          [](const models::NliModel& x, const std::vector<data::NliPair>& pairs, std::string head,
             const onto::ConceptGraph* graph) {
            if (head.empty()) head = x.has_head("target") ? "target" : x.heads().front();
            py::list out;
            for (const auto& p : harness::predict_pairs(x, pairs, head, graph)) out.append(prediction_dict(p));
            return out;
          },
          py::arg("pairs"), py::arg("head") = "", py::arg("graph") = nullptr);

  // ------------------------------------------------------------------- cli
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a clinli subcommand; returns (exit_code, stdout, stderr).");
  m.def("describe", [](const std::string& name) { return cli::describe(name); }, py::arg("subcommand"));
}
