#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clinli/autodiff/tensor.hpp"

namespace clinli::ad {

/// Named trainable tensors in insertion order.
class ParameterStore {
 public:
  using Entry = std::pair<std::string, Tensor>;

  /// Registers `value` (marked requires_grad) under a unique name.
  Tensor& add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();
  std::size_t scalar_count() const;

  /// Independent copy of every value (gradients are not copied).
  ParameterStore snapshot() const;
  /// Overwrites values in place from a store with identical names and shapes.
  void assign_from(const ParameterStore& other);

 private:
  std::vector<Entry> entries_;
};

// Checkpoint container, little-endian:
//   magic "CLNLCKPT" (8 bytes), u32 version (=1), u32 entry count, then per entry
//   u32 name length, name bytes (UTF-8), u32 rank, rank x u64 dims,
//   prod(dims) x f64 values in row-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params);
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::filesystem::path& path);
/// Loads values into an existing store; names and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& params);

}  // namespace clinli::ad
