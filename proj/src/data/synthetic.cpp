#include "clinli/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "clinli/error.hpp"

namespace clinli::data {

DomainProfile DomainProfile::clinical() {
  return {"clinical",
          {"the", "patient"},
          "has",
          "and",
          "no",
          "possibly",
          {"diabetes",   "hypertension", "pneumonia",  "asthma",      "anemia",    "sepsis",
           "cirrhosis",  "hepatitis",    "gout",       "migraine",    "epilepsy",  "psoriasis",
           "arthritis",  "bronchitis",   "cellulitis", "pancreatitis", "nephritis", "gastritis",
           "dementia",   "depression",   "obesity",    "hypothyroidism", "angina", "tuberculosis"}};
}

DomainProfile DomainProfile::general() {
  return {"general",
          {"the", "man"},
          "holds",
          "and",
          "no",
          "maybe",
          {"apple",  "book",   "cup",    "guitar", "hammer", "kite",   "ladder", "lamp",
           "map",    "mirror", "pencil", "phone",  "rope",   "shovel", "sign",   "spoon",
           "stick",  "ticket", "towel",  "toy",    "bag",    "ball",   "basket", "bottle"}};
}

DomainProfile DomainProfile::by_name(const std::string& name) {
  if (name == "clinical") return clinical();
  if (name == "general") return general();
  throw ConfigError("domain", "unknown synthetic domain \"" + name + "\" (expected clinical or general)");
}

namespace {

Tokens clause(const DomainProfile& d, bool negated, const std::string& term) {
  Tokens out = d.subject;
  out.push_back(d.verb);
  if (negated) out.push_back(d.negation);
  out.push_back(term);
  return out;
}

struct PremiseGroup {
  Tokens premise;
  std::array<Tokens, 3> hypotheses;  // indexed by label
};

PremiseGroup make_group(const DomainProfile& d, bool planted, std::size_t a, std::size_t b, std::mt19937_64& rng) {
  const auto& t = d.terms;
  std::uniform_int_distribution<std::size_t> pick_other(0, t.size() - 3);
  std::size_t c = pick_other(rng);
  for (std::size_t used : {std::min(a, b), std::max(a, b)})
    if (c >= used) ++c;
  std::bernoulli_distribution coin(0.5);
  PremiseGroup g;
  g.premise = d.subject;
  g.premise.push_back(d.verb);
  g.premise.push_back(t[a]);
  g.premise.push_back(d.conjunction);
  if (!planted) g.premise.push_back(d.negation);
  g.premise.push_back(t[b]);
  g.premise.push_back(".");

  const bool first = coin(rng);
  if (planted) {
    const std::string& mentioned = first ? t[a] : t[b];
    g.hypotheses[label_index(Label::entailment)] = clause(d, false, mentioned);
    g.hypotheses[label_index(Label::contradiction)] = clause(d, true, coin(rng) ? t[a] : t[b]);
    Tokens neutral{d.hedge};
    for (auto& tok : clause(d, false, t[c])) neutral.push_back(tok);
    g.hypotheses[label_index(Label::neutral)] = neutral;
  } else {
    // a is asserted, b is denied.
    g.hypotheses[label_index(Label::entailment)] = first ? clause(d, false, t[a]) : clause(d, true, t[b]);
    g.hypotheses[label_index(Label::contradiction)] = coin(rng) ? clause(d, true, t[a]) : clause(d, false, t[b]);
    g.hypotheses[label_index(Label::neutral)] = clause(d, coin(rng), t[c]);
  }
  return g;
}

}  // namespace

Dataset generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  const auto& d = spec.domain;
  if (d.terms.size() < 3) throw ConfigError("terms", "synthetic domain needs at least 3 terms");
  std::array<std::size_t, 3> groups{};
  std::size_t total_groups = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    groups[s] = (spec.sizes[s] + kNumLabels - 1) / kNumLabels;
    total_groups += groups[s];
  }
  std::vector<std::pair<std::size_t, std::size_t>> combos;
  for (std::size_t a = 0; a < d.terms.size(); ++a)
    for (std::size_t b = 0; b < d.terms.size(); ++b)
      if (a != b) combos.emplace_back(a, b);
  if (total_groups > combos.size()) {
    throw ConfigError("sizes", "domain " + d.name + " supports at most " + std::to_string(combos.size()) +
                                   " distinct premises, " + std::to_string(total_groups) + " requested");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(combos.begin(), combos.end(), rng);

  Dataset out;
  std::array<DatasetSplit*, 3> splits{&out.train, &out.dev, &out.test};
  std::size_t next = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& pairs = splits[s]->pairs;
    for (std::size_t g = 0; g < groups[s]; ++g) {
      auto [a, b] = combos[next++];
      PremiseGroup group = make_group(d, spec.planted_artifacts, a, b, rng);
      for (Label l : kLabels) {
        if (pairs.size() == spec.sizes[s]) break;
        pairs.push_back({d.name + "-" + std::string(split_name(splits[s]->name)) + "-" + std::to_string(pairs.size()),
                         group.premise, group.hypotheses[label_index(l)], l});
      }
    }
  }
  return out;
}

Dataset split_by_premise(const std::vector<NliPair>& pairs, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("ratios", "must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("ratios", "must sum to 1");

  std::vector<std::string> keys;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto key = join_tokens(pairs[i].premise);
    auto [it, inserted] = members.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(i);
  }
  const std::size_t n = keys.size();
  if (n < 3) throw ConfigError("pairs", "need at least 3 distinct premises, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  std::shuffle(keys.begin(), keys.end(), rng);

  // Largest-remainder apportionment, then make every split non-empty.
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double exact = ratios[s] * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[s] = exact - static_cast<double>(counts[s]);
    assigned += counts[s];
  }
  while (assigned < n) {
    const auto s = static_cast<std::size_t>(std::max_element(remainder.begin(), remainder.end()) - remainder.begin());
    ++counts[s];
    remainder[s] = -1.0;
    ++assigned;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    if (counts[s] == 0) {
      ++counts[s];
      --counts[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin())];
    }
  }

  Dataset out;
  std::array<DatasetSplit*, 3> splits{&out.train, &out.dev, &out.test};
  std::size_t k = 0;
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t g = 0; g < counts[s]; ++g, ++k)
      for (std::size_t i : members[keys[k]]) splits[s]->pairs.push_back(pairs[i]);
  return out;
}

}  // namespace clinli::data
