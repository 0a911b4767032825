#include "clinli/embeddings/embedding_matrix.hpp"

#include <cmath>
#include <random>

#include "clinli/error.hpp"

namespace clinli::emb {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint32_t fnv1a32(std::string_view text) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : text) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::vector<std::string> char_ngrams(std::string_view token, const SubwordConfig& config) {
  const std::string padded = "<" + std::string(token) + ">";
  std::vector<std::string> out;
  for (std::size_t n = config.min_n; n <= config.max_n; ++n) {
    if (n > padded.size()) break;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      if (n == padded.size()) continue;
      out.push_back(padded.substr(i, n));
    }
  }
  return out;
}

std::vector<std::uint32_t> subword_buckets(std::string_view token, const SubwordConfig& config) {
  if (config.buckets == 0) throw ConfigError("buckets", "must be >= 1");
  std::vector<std::uint32_t> out;
  for (const auto& g : char_ngrams(token, config)) out.push_back(fnv1a32(g) % config.buckets);
  return out;
}

std::optional<std::vector<double>> SubwordTable::compose(std::string_view token) const {
  std::vector<double> sum(dim, 0.0);
  bool any = false;
  for (auto b : subword_buckets(token, config)) {
    auto it = vectors.find(b);
    if (it == vectors.end()) continue;
    any = true;
    for (std::size_t k = 0; k < dim; ++k) sum[k] += it->second[k];
  }
  if (!any) return std::nullopt;
  return sum;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::string provenance)
    : dim_(dim), provenance_(std::move(provenance)) {
  if (dim == 0) throw ConfigError("dim", "must be >= 1");
}

EmbeddingMatrix::EmbeddingMatrix(const EmbeddingMatrix& other)
    : dim_(other.dim_),
      provenance_(other.provenance_),
      tokens_(other.tokens_),
      index_(other.index_),
      data_(other.data_),
      subwords_(other.subwords_) {}

EmbeddingMatrix& EmbeddingMatrix::operator=(const EmbeddingMatrix& other) {
  if (this != &other) {
    EmbeddingMatrix copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void EmbeddingMatrix::add(const std::string& token, std::span<const double> values) {
  if (values.size() != dim_) {
    throw ShapeError("vector for \"" + token + "\" has " + std::to_string(values.size()) + " components, expected " +
                     std::to_string(dim_));
  }
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("non-finite component in vector for \"" + token + "\"");
  if (index_.count(token)) throw Error("duplicate token \"" + token + "\"");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  data_.insert(data_.end(), values.begin(), values.end());
}

bool EmbeddingMatrix::contains(std::string_view token) const { return find(token).has_value(); }

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingMatrix::row(std::size_t index) const {
  return std::span<const double>(data_).subspan(index * dim_, dim_);
}

std::span<double> EmbeddingMatrix::mutable_row(std::size_t index) {
  return std::span<double>(data_).subspan(index * dim_, dim_);
}

std::span<const double> EmbeddingMatrix::vector(std::string_view token) const {
  auto i = find(token);
  if (!i) throw Error("token \"" + std::string(token) + "\" is not in the embedding vocabulary");
  return row(*i);
}

std::vector<double> fallback_vector(std::string_view token, std::size_t dim) {
  std::mt19937_64 rng(fnv1a64(token));
  const double half = 0.5 / static_cast<double>(dim);
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<double> out(dim);
  for (auto& v : out) v = u(rng);
  return out;
}

std::vector<double> EmbeddingMatrix::lookup(std::string_view token) const {
  if (auto i = find(token)) {
    auto r = row(*i);
    return {r.begin(), r.end()};
  }
  if (subwords_) {
    if (auto composed = subwords_->compose(token)) return *composed;
  }
  std::lock_guard lock(cache_->mutex);
  auto [it, inserted] = cache_->vectors.try_emplace(std::string(token));
  if (inserted) it->second = fallback_vector(token, dim_);
  return it->second;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace clinli::emb
