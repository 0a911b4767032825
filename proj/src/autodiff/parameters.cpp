#include "clinli/autodiff/parameters.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "clinli/error.hpp"

namespace clinli::ad {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Tensor& ParameterStore::add(std::string name, Tensor value) {
  if (contains(name)) throw Error("parameter store: duplicate name " + name);
  value.set_requires_grad(true);
  entries_.emplace_back(std::move(name), std::move(value));
  return entries_.back().second;
}

bool ParameterStore::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == name; });
}

Tensor& ParameterStore::at(std::string_view name) {
  for (auto& e : entries_)
    if (e.first == name) return e.second;
  throw Error("parameter store: no parameter named " + std::string(name));
}

const Tensor& ParameterStore::at(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

ParameterStore ParameterStore::snapshot() const {
  ParameterStore copy;
  for (const auto& [name, t] : entries_) copy.entries_.emplace_back(name, Tensor::from(t.shape(), {t.data().begin(), t.data().end()}, true));
  return copy;
}

void ParameterStore::assign_from(const ParameterStore& other) {
  for (auto& [name, t] : entries_) {
    const Tensor& src = other.at(name);
    if (src.shape() != t.shape()) {
      throw ShapeError("assign_from: " + name + " has shape " + shape_string(t.shape()) + " but source has " +
                       shape_string(src.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
  }
}

namespace {

constexpr char kMagic[8] = {'C', 'L', 'N', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw ParseError("checkpoint truncated: " + path.string(), 0);
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ParseError("not a checkpoint file: " + path.string(), 0);
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  }
  const auto count = take<std::uint32_t>(in, path);
  std::vector<std::pair<std::string, Tensor>> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(take<std::uint32_t>(in, path), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) throw ParseError("checkpoint truncated", 0);
    Shape shape(take<std::uint32_t>(in, path));
    for (auto& d : shape) d = static_cast<std::size_t>(take<std::uint64_t>(in, path));
    std::vector<double> values(shape_size(shape));
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw ParseError("checkpoint truncated in " + name, 0);
    }
    entries.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return entries;
}

void load_checkpoint(const std::filesystem::path& path, ParameterStore& params) {
  auto entries = read_checkpoint(path);
  if (entries.size() != params.size()) {
    throw Error("checkpoint holds " + std::to_string(entries.size()) + " parameters, model has " +
                std::to_string(params.size()));
  }
  ParameterStore loaded;
  for (auto& [name, t] : entries) loaded.add(name, t);
  params.assign_from(loaded);
}

}  // namespace clinli::ad
