#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clinli::data {

/// Canonical label order, fixed across every module and report.
enum class Label : int { entailment = 0, contradiction = 1, neutral = 2 };

inline constexpr std::array<Label, 3> kLabels{Label::entailment, Label::contradiction, Label::neutral};
inline constexpr std::size_t kNumLabels = 3;

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view name);
inline int label_index(Label label) { return static_cast<int>(label); }

using Tokens = std::vector<std::string>;

struct NliPair {
  std::string pair_id;
  Tokens premise;
  Tokens hypothesis;
  Label label = Label::neutral;

  bool operator==(const NliPair&) const = default;
};

enum class SplitName { train, dev, test };
std::string_view split_name(SplitName name);

struct DatasetSplit {
  SplitName name = SplitName::train;
  std::vector<NliPair> pairs;
};

struct Dataset {
  DatasetSplit train{SplitName::train, {}};
  DatasetSplit dev{SplitName::dev, {}};
  DatasetSplit test{SplitName::test, {}};
};

/// Space-joined token string, used as the premise grouping key.
std::string join_tokens(const Tokens& tokens);

}  // namespace clinli::data
