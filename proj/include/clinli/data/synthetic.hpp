#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "clinli/data/nli.hpp"

namespace clinli::data {

/// Template vocabulary for one synthetic domain.
struct DomainProfile {
  std::string name;
  std::vector<std::string> subject;  // e.g. {"the", "patient"}
  std::string verb;
  std::string conjunction = "and";
  std::string negation = "no";
  std::string hedge;
  std::vector<std::string> terms;  // conditions / objects, one token each

  static DomainProfile clinical();
  static DomainProfile general();
  static DomainProfile by_name(const std::string& name);
};

struct SyntheticSpec {
  DomainProfile domain = DomainProfile::clinical();
  std::array<std::size_t, 3> sizes{96, 24, 24};  // pairs in train, dev, test
  // Planted mode: a negation token appears iff contradiction and the hedge
  // token iff neutral, so the hypothesis alone gives the label away.
  bool planted_artifacts = false;
};

/// Each premise yields one pair per label; splits never share a premise.
/// Artifact-free premises read "<subject> <verb> A and no B ." and every
/// label sees the same hypothesis distribution. Throws ConfigError when the
/// term list cannot supply enough distinct premises.
Dataset generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

/// Assigns whole premise groups (keyed by the joined premise tokens) to
/// train/dev/test in proportions close to `ratios`, each split receiving at
/// least one group. Throws ConfigError when ratios do not sum to 1 or fewer
/// than three distinct premises exist.
Dataset split_by_premise(const std::vector<NliPair>& pairs, const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace clinli::data
