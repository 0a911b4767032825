#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clinli::emb {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);
/// 32-bit FNV-1a, the bucket hash for character n-grams.
std::uint32_t fnv1a32(std::string_view text);

struct SubwordConfig {
  std::size_t min_n = 3;
  std::size_t max_n = 6;
  std::uint32_t buckets = 1u << 17;
  static constexpr std::string_view kHashId = "fnv1a32";
};

/// Character n-grams of "<token>" with lengths in [min_n, max_n], excluding
/// the bracketed token itself. Counted over UTF-8 bytes.
std::vector<std::string> char_ngrams(std::string_view token, const SubwordConfig& config);
/// Bucket ids for char_ngrams(token), in the same order (a multiset).
std::vector<std::uint32_t> subword_buckets(std::string_view token, const SubwordConfig& config);

/// Sparse table of hashed n-gram vectors. Untouched buckets read as zero.
struct SubwordTable {
  SubwordConfig config;
  std::size_t dim = 0;
  std::unordered_map<std::uint32_t, std::vector<double>> vectors;

  /// Sum of the bucket vectors of `token`; nullopt when none is stored.
  std::optional<std::vector<double>> compose(std::string_view token) const;
};

/// Vocabulary-indexed dense vectors plus a provenance tag such as
/// "glove→bioasq→mimic".
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim, std::string provenance = "");
  EmbeddingMatrix(const EmbeddingMatrix& other);
  EmbeddingMatrix& operator=(const EmbeddingMatrix& other);
  EmbeddingMatrix(EmbeddingMatrix&&) noexcept = default;
  EmbeddingMatrix& operator=(EmbeddingMatrix&&) noexcept = default;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& provenance() const noexcept { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  /// Appends a token; throws on duplicates, wrong width or non-finite values.
  void add(const std::string& token, std::span<const double> values);
  bool contains(std::string_view token) const;
  std::optional<std::size_t> find(std::string_view token) const;
  std::span<const double> row(std::size_t index) const;
  std::span<double> mutable_row(std::size_t index);
  std::span<const double> vector(std::string_view token) const;  // throws when absent

  const std::optional<SubwordTable>& subwords() const noexcept { return subwords_; }
  void set_subwords(std::optional<SubwordTable> table) { subwords_ = std::move(table); }

  /// Stored vector; else the n-gram composition when a subword table exists;
  /// else a vector drawn uniformly from [-0.5/dim, 0.5/dim] seeded by the
  /// token hash. Fallback vectors are cached; lookups are thread-safe.
  std::vector<double> lookup(std::string_view token) const;

 private:
  struct Cache {
    std::mutex mutex;
    std::unordered_map<std::string, std::vector<double>> vectors;
  };

  std::size_t dim_ = 0;
  std::string provenance_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::optional<SubwordTable> subwords_;
  std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();
};

/// The seeded uniform fallback vector for `token`.
std::vector<double> fallback_vector(std::string_view token, std::size_t dim);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace clinli::emb
