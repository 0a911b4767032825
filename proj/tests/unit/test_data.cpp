#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "clinli/data/annotation.hpp"
#include "clinli/data/dataset_io.hpp"
#include "clinli/data/stats.hpp"
#include "clinli/data/synthetic.hpp"
#include "clinli/data/text.hpp"
#include "clinli/data/vocab.hpp"
#include "clinli/error.hpp"

using namespace clinli;
using namespace clinli::data;

namespace {

Tokens toks(std::initializer_list<const char*> words) { return Tokens(words.begin(), words.end()); }

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "clinli_test_data";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::set<std::string> premise_set(const DatasetSplit& s) {
  std::set<std::string> out;
  for (const auto& p : s.pairs) out.insert(join_tokens(p.premise));
  return out;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a)
    if (b.count(x)) return false;
  return true;
}

// Independent kappa oracle from a confusion table.
double kappa_from_table(const std::vector<std::vector<double>>& t) {
  double n = 0, diag = 0;
  std::vector<double> rows(t.size(), 0), cols(t.size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      n += t[i][j];
      rows[i] += t[i][j];
      cols[j] += t[i][j];
      if (i == j) diag += t[i][j];
    }
  double pe = 0;
  for (std::size_t i = 0; i < t.size(); ++i) pe += rows[i] * cols[i] / (n * n);
  return (diag / n - pe) / (1 - pe);
}

void expand_table(const std::vector<std::vector<int>>& t, std::vector<Label>& a, std::vector<Label>& b) {
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (int k = 0; k < t[i][j]; ++k) {
        a.push_back(kLabels[i]);
        b.push_back(kLabels[j]);
      }
}

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(tokenize("No CP or fevers.") == toks({"no", "cp", "or", "fevers", "."}));
  CHECK(tokenize("").empty());
  CHECK(tokenize("last A1c : 13.3 %") == toks({"last", "a1c", ":", "13.3", "%"}));
  CHECK(tokenize("Seen by Dr. Smith, e.g. today") == toks({"seen", "by", "dr.", "smith", ",", "e.g.", "today"}));
  CHECK(tokenize("h/o x-ray on [** 3-23 **]") == toks({"h/o", "x-ray", "on", "[", "**", "3-23", "**", "]"}));
  CHECK(tokenize("BP 120/80, HR 1,200...") == toks({"bp", "120/80", ",", "hr", "1,200", "..."}));
}

TEST_CASE("tokenize is idempotent on its joined output") {
  for (const char* text : {"No CP or fevers.", "last A1c [** 3-23 **] : 13.3 %", "Pt's BP 140/90 -- stable!!",
                           "Mr. Jones (age 54) denies SOB; e.g. at rest.", "x-ray: neg. 2.5mg q.d."}) {
    const Tokens once = tokenize(text);
    CHECK(tokenize(join_tokens(once)) == once);
  }
}

TEST_CASE("split_sentences examples") {
  CHECK(split_sentences("Pt stable. Discharged home.").size() == 2);
  CHECK(split_sentences("Dr. Smith was consulted.").size() == 1);
  CHECK(split_sentences("last A1c [** 3-23 **] : 13.3 %").size() == 1);
  CHECK(split_sentences("Seen by J. Smith. Stable.") == std::vector<std::string>{"Seen by J. Smith.", "Stable."});
  CHECK(split_sentences("Admitted [**Hospital. Name**] today. Doing well?  Yes! 3 days later home.").size() == 4);
  CHECK(split_sentences("Temp 38.5 today. no change.").size() == 1);
  CHECK(split_sentences("").empty());
}

TEST_CASE("segment_note_sections") {
  const auto aliases = SectionAliases::builtin();
  SUBCASE("canonical header") {
    auto s = segment_note_sections("PAST MEDICAL HISTORY:\nDiabetes.", aliases, "n1");
    REQUIRE(s.size() == 1);
    CHECK(s[0].header == "past_medical_history");
    CHECK(s[0].body == "Diabetes.");
    CHECK(s[0].note_id == "n1");
  }
  SUBCASE("no headers") {
    auto s = segment_note_sections("just some text\nmore text", aliases);
    REQUIRE(s.size() == 1);
    CHECK(s[0].header == NoteSection::kUnnamed);
  }
  SUBCASE("alias") {
    auto s = segment_note_sections("PMH:\nHTN, DM2.", aliases);
    REQUIRE(s.size() == 1);
    CHECK(s[0].header == "past_medical_history");
  }
  SUBCASE("preamble, inline body and unknown header") {
    auto s = segment_note_sections("Admission note\nChief Complaint: chest pain\nSocial Detail Notes:\nlives alone",
                                   aliases);
    REQUIRE(s.size() == 3);
    CHECK(s[0].header == NoteSection::kUnnamed);
    CHECK(s[1].header == "chief_complaint");
    CHECK(s[1].body == "chest pain");
    CHECK(s[2].header == "social_detail_notes");
  }
  SUBCASE("seven capitalized words is not a header") {
    auto s = segment_note_sections("One Two Three Four Five Six Seven: x", aliases);
    REQUIRE(s.size() == 1);
    CHECK(s[0].header == NoteSection::kUnnamed);
  }
  SUBCASE("custom aliases") {
    SectionAliases custom;
    custom.add("Hx", "history");
    CHECK(custom.canonical("HX") == "history");
    CHECK(custom.canonical("Brief  Hospital Course") == "brief_hospital_course");
  }
}

TEST_CASE("section concatenation loses no non-header text") {
  const std::string note =
      "Intro line one.\nPMH:  HTN\nDM2 [** 2-3 **]\n\nMEDICATIONS ON ADMISSION:\nmetformin 500 mg\n"
      "lisinopril\nAllergies: NKDA\nPlan: follow up.";
  auto sections = segment_note_sections(note, SectionAliases::builtin());
  std::string joined;
  for (const auto& s : sections) joined += s.body + " ";
  auto words = [](const std::string& t) {
    std::istringstream in(t);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  };
  CHECK(words(joined) == words("Intro line one. HTN DM2 [** 2-3 **] metformin 500 mg lisinopril NKDA follow up."));
}

TEST_CASE("dataset_io round trip and errors") {
  DatasetSplit split{SplitName::dev,
                     {{"p1", toks({"the", "patient", "has", "copd"}), toks({"no", "lung", "disease"}), Label::contradiction},
                      {"p2", toks({"bp", "13.3", "%"}), toks({"stable", "\"quoted\""}), Label::entailment},
                      {"p3", toks({"a", "b c"}), toks({"x"}), Label::neutral}}};
  std::stringstream buf;
  write_jsonl(buf, split);
  auto back = read_jsonl(buf, SplitName::dev);
  CHECK(back.split.pairs == split.pairs);
  CHECK(back.skipped_unlabeled == 0);

  SUBCASE("unknown label reports its line") {
    std::istringstream in(
        "{\"gold_label\":\"neutral\",\"sentence1\":\"a\",\"sentence2\":\"b\"}\n"
        "{\"gold_label\":\"maybe\",\"sentence1\":\"a\",\"sentence2\":\"b\"}\n");
    try {
      read_jsonl(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("malformed line") {
    std::istringstream in("{\"gold_label\":\"neutral\",\"sentence1\":\"a\",\"sentence2\":\"b\"}\n\n{not json\n");
    try {
      read_jsonl(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing field") {
    std::istringstream in("{\"gold_label\":\"neutral\",\"sentence1\":\"a\"}\n");
    CHECK_THROWS_AS(read_jsonl(in), ParseError);
  }
  SUBCASE("SNLI convention") {
    std::istringstream in(
        "{\"annotator_labels\":[\"neutral\"],\"gold_label\":\"-\",\"sentence1\":\"A man.\",\"sentence2\":\"B.\","
        "\"pairID\":\"x1\"}\n"
        "{\"gold_label\":\"entailment\",\"sentence1\":\"A man plays.\",\"sentence2\":\"A man.\","
        "\"sentence1_binary_parse\":\"( ( A man ) plays )\",\"captionID\":\"c\"}\n");
    auto r = read_jsonl(in);
    CHECK(r.skipped_unlabeled == 1);
    REQUIRE(r.split.pairs.size() == 1);
    CHECK(r.split.pairs[0].premise == toks({"a", "man", "plays", "."}));
    CHECK(r.split.pairs[0].pair_id == "line-2");
  }
  SUBCASE("file round trip") {
    const auto path = temp_file("split.jsonl");
    write_jsonl(path, split);
    CHECK(read_jsonl(path, SplitName::dev).split.pairs == split.pairs);
  }
}

TEST_CASE("dataset_io round trip on random splits") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pool{"a", "b", "13.3", "x-ray", "\\", "\"", "ü", "[**", "no", "."};
  for (int trial = 0; trial < 20; ++trial) {
    DatasetSplit split;
    for (int i = 0; i < 5; ++i) {
      NliPair p;
      p.pair_id = "id" + std::to_string(rng() % 1000);
      for (std::size_t k = 0, n = 1 + rng() % 6; k < n; ++k) p.premise.push_back(pool[rng() % pool.size()]);
      for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) p.hypothesis.push_back(pool[rng() % pool.size()]);
      p.label = kLabels[rng() % 3];
      split.pairs.push_back(p);
    }
    std::stringstream buf;
    write_jsonl(buf, split);
    CHECK(read_jsonl(buf).split.pairs == split.pairs);
  }
}

TEST_CASE("build_vocab") {
  DatasetSplit train{SplitName::train, {{"1", toks({"a", "a", "b"}), toks({"a"}), Label::neutral}}};
  auto v2 = build_vocab(train, 2);
  CHECK(v2.size() == 3);
  CHECK(v2.token(0) == "<pad>");
  CHECK(v2.token(1) == "<unk>");
  CHECK(v2.token(2) == "a");
  auto v1 = build_vocab(train, 1);
  CHECK(v1.find("a").has_value());
  CHECK(v1.find("b").has_value());
  CHECK(v1.index("dev-only") == Vocabulary::kUnk);
  CHECK_THROWS_AS(build_vocab(train, 0), ConfigError);
}

TEST_CASE("batchify") {
  Vocabulary vocab;
  for (auto* w : {"a", "b", "c", "d", "e"}) vocab.add(w);
  std::vector<NliPair> pairs{{"1", toks({"a", "b", "c"}), toks({"a"}), Label::entailment},
                             {"2", toks({"a", "b", "c", "d", "e"}), toks({"zzz", "b"}), Label::neutral}};
  auto batches = batchify(pairs, vocab, {2, false, 0});
  REQUIRE(batches.size() == 1);
  const auto& b = batches[0];
  CHECK(b.premise_len == 5);
  CHECK(b.premise_mask.count() == 8);
  CHECK(std::count(b.premise_mask.valid.begin(), b.premise_mask.valid.begin() + 5, 1) == 3);
  CHECK(std::count(b.premise_mask.valid.begin() + 5, b.premise_mask.valid.end(), 1) == 5);
  CHECK(b.hypothesis_ids[2] == Vocabulary::kUnk);
  CHECK(b.hypothesis_tokens[1][0] == "zzz");
  CHECK(b.labels == std::vector<int>{0, 2});

  auto singles = batchify(pairs, vocab, {1, false, 0});
  REQUIRE(singles.size() == 2);
  for (const auto& s : singles) CHECK(s.premise_mask.count() == s.premise_len);

  std::vector<NliPair> many;
  for (int i = 0; i < 40; ++i) many.push_back({std::to_string(i), toks({"a"}), toks({"b"}), Label::neutral});
  auto x = batchify(many, vocab, {8, true, 5});
  auto y = batchify(many, vocab, {8, true, 5});
  auto z = batchify(many, vocab, {8, true, 6});
  std::vector<std::string> xi, yi, zi;
  for (auto& bb : x) xi.insert(xi.end(), bb.pair_ids.begin(), bb.pair_ids.end());
  for (auto& bb : y) yi.insert(yi.end(), bb.pair_ids.begin(), bb.pair_ids.end());
  for (auto& bb : z) zi.insert(zi.end(), bb.pair_ids.begin(), bb.pair_ids.end());
  CHECK(xi == yi);
  CHECK(xi != zi);
  CHECK_THROWS_AS(batchify(many, vocab, {0, false, 0}), ConfigError);
}

TEST_CASE("annotation prompt batch") {
  std::vector<std::string> candidates;
  for (int i = 0; i < 100; ++i) candidates.push_back("Sentence number " + std::to_string(i) + ".");
  auto batch = prepare_annotation_batch(candidates, 100, 3);
  CHECK(batch.premises.size() == 100);
  std::set<std::string> ids;
  bool identity_order = true;
  for (std::size_t i = 0; i < batch.premises.size(); ++i) {
    ids.insert(batch.premises[i].premise_id);
    identity_order &= batch.premises[i].premise_id == "premise-" + std::to_string(i);
  }
  CHECK(ids.size() == 100);
  CHECK_FALSE(identity_order);
  CHECK(prepare_annotation_batch(candidates, 100, 3).prompt_text == batch.prompt_text);
  CHECK_THROWS_AS(prepare_annotation_batch(candidates, 101, 3), ConfigError);

  auto small = prepare_annotation_batch(candidates, 2, 9);
  CHECK(small.prompt_text.find("\n\n") != std::string::npos);
  const auto first_block = small.prompt_text.substr(0, small.prompt_text.find("\n\n"));
  CHECK(first_block.find("Write one alternate sentence that is definitely a true description of the patient.") !=
        std::string::npos);
  CHECK(first_block.find("Write one alternate sentence that might be a true description of the patient.") !=
        std::string::npos);
  CHECK(first_block.find("Write one sentence that is definitely a false description of the patient.") !=
        std::string::npos);
  CHECK(first_block.find(small.premises[0].text) != std::string::npos);
}

TEST_CASE("annotation ingest") {
  AnnotationRecord complete{"premise-1", "Patient has type II diabetes.",
                            {{Label::entailment, "Patient has a chronic condition."},
                             {Label::neutral, "Patient has hypertension."},
                             {Label::contradiction, "Insulin levels are normal."}},
                            "a1", false, "", {}};
  AnnotationRecord flagged{"premise-2", "Garbled [** **] text", {}, "a1", true, "not a patient description", {}};
  AnnotationRecord partial = complete;
  partial.premise_id = "premise-3";
  partial.hypotheses.erase(Label::neutral);

  auto one = ingest_annotations({complete});
  REQUIRE(one.pairs.size() == 3);
  CHECK(one.pairs[0].label == Label::entailment);
  CHECK(one.pairs[1].label == Label::contradiction);
  CHECK(one.pairs[2].label == Label::neutral);
  CHECK(one.pairs[0].premise == one.pairs[2].premise);

  auto bad = ingest_annotations({flagged, partial});
  CHECK(bad.pairs.empty());
  REQUIRE(bad.discarded.size() == 2);
  CHECK(bad.discarded[0].reason == "not a patient description");
  CHECK(bad.discarded[1].reason.find("neutral") != std::string::npos);

  std::vector<AnnotationRecord> records;
  for (int i = 0; i < 200; ++i) {
    auto r = i < 184 ? complete : flagged;
    r.premise_id = "premise-" + std::to_string(i);
    records.push_back(r);
  }
  auto all = ingest_annotations(records);
  CHECK(all.pairs.size() == 552);
  CHECK(all.discarded.size() == 16);
}

TEST_CASE("annotation records file") {
  const auto path = temp_file("annotations.jsonl");
  {
    std::ofstream out(path);
    out << R"({"premise_id":"premise-4","hypothesis_entailment":"a","hypothesis_neutral":"b",)"
        << R"("hypothesis_contradiction":"c","invalid":false,"annotator_id":"x",)"
        << R"("judgments":{"entailment":"definitely-true","neutral":"definitely-false"}})" << "\n";
    out << R"({"premise_id":"premise-5","premise":"P","invalid":true,"invalid_reason":"r","annotator_id":"x"})"
        << "\n";
  }
  auto records = read_annotation_records(path, {{"premise-4", "Pt has gout."}});
  REQUIRE(records.size() == 2);
  CHECK(records[0].premise == "Pt has gout.");
  CHECK(records[0].hypotheses.size() == 3);
  CHECK(records[1].invalid);
  auto [intended, judged] = agreement_labels(records);
  CHECK(intended == std::vector<Label>{Label::entailment, Label::neutral});
  CHECK(judged == std::vector<Label>{Label::entailment, Label::contradiction});
  CHECK(judgment_label(Judgment::maybe_true) == Label::neutral);
  CHECK_FALSE(parse_judgment("probably").has_value());
}

TEST_CASE("cohens_kappa") {
  std::vector<Label> a, b;
  expand_table({{20, 5, 0}, {10, 15, 5}, {0, 5, 40}}, a, b);
  const double oracle = kappa_from_table({{20, 5, 0}, {10, 15, 5}, {0, 5, 40}});
  CHECK(oracle == doctest::Approx(0.3975 / 0.6475).epsilon(1e-12));
  CHECK(cohens_kappa(a, b) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::abs(cohens_kappa(a, b) - 0.6139) < 1e-4);
  CHECK(cohens_kappa(a, b) == doctest::Approx(cohens_kappa(b, a)).epsilon(1e-15));

  // Consistent relabeling leaves kappa unchanged.
  auto relabel = [](std::vector<Label> v) {
    for (auto& l : v) l = kLabels[(label_index(l) + 1) % 3];
    return v;
  };
  CHECK(cohens_kappa(relabel(a), relabel(b)) == doctest::Approx(cohens_kappa(a, b)).epsilon(1e-12));

  CHECK(cohens_kappa(a, a) == 1.0);
  auto b2 = a;
  b2[0] = Label::neutral;
  CHECK(cohens_kappa(a, b2) < 1.0);

  std::vector<Label> same(5, Label::neutral);
  CHECK(cohens_kappa(same, same) == 1.0);
  std::vector<Label> other(5, Label::entailment);
  CHECK(cohens_kappa(same, other) == doctest::Approx(0.0));
  CHECK_THROWS_AS(cohens_kappa({}, {}), Error);
  CHECK_THROWS_AS(cohens_kappa(a, same), Error);

  std::mt19937_64 rng(42);
  std::vector<Label> r1, r2;
  for (int i = 0; i < 10000; ++i) {
    r1.push_back(kLabels[rng() % 3]);
    r2.push_back(kLabels[rng() % 3]);
  }
  CHECK(std::abs(cohens_kappa(r1, r2)) < 0.05);
}

TEST_CASE("dataset_stats") {
  Dataset d;
  d.train.pairs.push_back({"1", toks({"a", "b", "c", "d"}), toks({"x", "y"}), Label::neutral});
  auto s = dataset_stats(d);
  CHECK(s.splits[0].pairs == 1);
  CHECK(s.splits[0].premise.mean == 4.0);
  CHECK(s.splits[0].premise.max == 4);
  CHECK(s.splits[1].pairs == 0);
  CHECK(s.overall.hypothesis.mean == 2.0);

  d.dev.pairs.push_back({"2", Tokens(12, "w"), toks({"x"}), Label::neutral});
  auto custom = dataset_stats(d, {{0, 3, 10}});
  CHECK(custom.overall.premise.histogram == std::vector<std::size_t>{0, 1, 1});
  CHECK(custom.overall.hypothesis.histogram == std::vector<std::size_t>{2, 0, 0});
  auto j = stats_to_json(custom);
  CHECK(j["splits"]["dev"]["premise"]["max"] == 12);
  CHECK(j["overall"]["pairs"] == 2);

  CHECK_THROWS_AS(dataset_stats(Dataset{}), Error);
  CHECK_THROWS_AS(dataset_stats(d, {{3, 3}}), ConfigError);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  auto d = generate_synthetic_dataset(spec, 1);
  CHECK(d.train.pairs.size() == 96);
  CHECK(d.dev.pairs.size() == 24);
  CHECK(d.test.pairs.size() == 24);
  const auto tr = premise_set(d.train), dv = premise_set(d.dev), te = premise_set(d.test);
  CHECK(disjoint(tr, dv));
  CHECK(disjoint(tr, te));
  CHECK(disjoint(dv, te));

  std::ostringstream a, b;
  write_jsonl(a, d.train);
  write_jsonl(b, generate_synthetic_dataset(spec, 1).train);
  CHECK(a.str() == b.str());
  std::ostringstream c;
  write_jsonl(c, generate_synthetic_dataset(spec, 2).train);
  CHECK(a.str() != c.str());

  SUBCASE("planted negation iff contradiction") {
    spec.planted_artifacts = true;
    auto p = generate_synthetic_dataset(spec, 4);
    for (const auto* split : {&p.train, &p.dev, &p.test})
      for (const auto& pair : split->pairs) {
        const bool negated = std::count(pair.hypothesis.begin(), pair.hypothesis.end(), "no") > 0;
        CHECK(negated == (pair.label == Label::contradiction));
      }
  }
  SUBCASE("artifact-free hypotheses carry no label marker") {
    spec.sizes = {600, 0, 0};
    auto f = generate_synthetic_dataset(spec, 4);
    std::array<int, 3> negated{};
    for (const auto& pair : f.train.pairs)
      negated[label_index(pair.label)] += std::count(pair.hypothesis.begin(), pair.hypothesis.end(), "no") > 0;
    for (int n : negated) CHECK(std::abs(n - 100) < 30);
  }
  SUBCASE("uneven sizes and capacity") {
    spec.sizes = {10, 4, 5};
    auto u = generate_synthetic_dataset(spec, 3);
    CHECK(u.train.pairs.size() == 10);
    CHECK(u.dev.pairs.size() == 4);
    CHECK(u.test.pairs.size() == 5);
    spec.sizes = {3000, 0, 0};
    CHECK_THROWS_AS(generate_synthetic_dataset(spec, 3), ConfigError);
  }
  SUBCASE("domains") {
    CHECK(DomainProfile::by_name("general").terms.size() == 24);
    CHECK_THROWS_AS(DomainProfile::by_name("legal"), ConfigError);
  }
}

TEST_CASE("split_by_premise") {
  std::vector<NliPair> pairs;
  for (int g = 0; g < 10; ++g)
    for (Label l : kLabels)
      pairs.push_back({std::to_string(g) + "-" + std::string(label_name(l)), toks({"premise", std::to_string(g).c_str()}),
                       toks({"h"}), l});
  auto d = split_by_premise(pairs, {0.8, 0.1, 0.1}, 7);
  CHECK(premise_set(d.train).size() == 8);
  CHECK(premise_set(d.dev).size() == 1);
  CHECK(premise_set(d.test).size() == 1);
  CHECK(d.train.pairs.size() == 24);
  auto again = split_by_premise(pairs, {0.8, 0.1, 0.1}, 7);
  CHECK(again.train.pairs == d.train.pairs);
  CHECK(again.test.pairs == d.test.pairs);

  CHECK_THROWS_AS(split_by_premise(pairs, {0.5, 0.1, 0.1}, 7), ConfigError);
  std::vector<NliPair> two(pairs.begin(), pairs.begin() + 6);
  CHECK_THROWS_AS(split_by_premise(two, {0.8, 0.1, 0.1}, 7), ConfigError);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<NliPair> random_pairs;
    const std::size_t n = 20 + rng() % 80;
    for (std::size_t i = 0; i < n; ++i)
      random_pairs.push_back({std::to_string(i), toks({"p", std::to_string(rng() % 15).c_str()}), toks({"h"}),
                              kLabels[rng() % 3]});
    std::set<std::string> distinct;
    for (const auto& p : random_pairs) distinct.insert(join_tokens(p.premise));
    if (distinct.size() < 3) continue;
    auto s = split_by_premise(random_pairs, {0.6, 0.2, 0.2}, rng());
    const auto a = premise_set(s.train), b = premise_set(s.dev), c = premise_set(s.test);
    CHECK(disjoint(a, b));
    CHECK(disjoint(a, c));
    CHECK(disjoint(b, c));
    CHECK(!a.empty());
    CHECK(!b.empty());
    CHECK(!c.empty());
    CHECK(s.train.pairs.size() + s.dev.pairs.size() + s.test.pairs.size() == n);
  }
}
