#include "clinli/embeddings/vectors_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clinli/error.hpp"

namespace clinli::emb {

namespace {

std::vector<std::string> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

bool parse_size(const std::string& s, std::size_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("invalid number \"" + s + "\"", line);
  }
}

}  // namespace

EmbeddingMatrix read_vectors(std::istream& in, std::string provenance) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared_count;
  std::size_t dim = 0;
  EmbeddingMatrix matrix;
  bool first = true;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = fields(line);
    if (f.empty()) continue;
    if (first) {
      first = false;
      std::size_t count = 0, d = 0;
      if (f.size() == 2 && parse_size(f[0], count) && parse_size(f[1], d)) {
        if (d == 0) throw ParseError("header declares dimension 0", line_no);
        declared_count = count;
        dim = d;
        matrix = EmbeddingMatrix(dim, provenance);
        continue;
      }
    }
    if (f.size() < 2) throw ParseError("expected a token followed by numbers", line_no);
    if (dim == 0) {
      dim = f.size() - 1;
      matrix = EmbeddingMatrix(dim, provenance);
    }
    if (f.size() - 1 != dim) {
      throw ParseError("vector has " + std::to_string(f.size() - 1) + " components, expected " + std::to_string(dim),
                       line_no);
    }
    values.clear();
    for (std::size_t k = 1; k < f.size(); ++k) values.push_back(parse_number(f[k], line_no));
    try {
      matrix.add(f[0], values);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (dim == 0) throw ParseError("no vectors found", line_no);
  if (declared_count && *declared_count != matrix.size()) {
    throw ParseError("header declares " + std::to_string(*declared_count) + " vectors but the file holds " +
                         std::to_string(matrix.size()) + " (count mismatch)",
                     line_no);
  }
  return matrix;
}

EmbeddingMatrix read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vectors " + path.string());
  return read_vectors(in, path.stem().string());
}

void write_vectors(std::ostream& out, const EmbeddingMatrix& matrix, const WriteVectorsOptions& options) {
  if (options.precision < 7) throw ConfigError("precision", "must be >= 7 significant digits");
  if (options.header) out << matrix.size() << ' ' << matrix.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << matrix.tokens()[i];
    for (double v : matrix.row(i)) {
      std::snprintf(buf, sizeof buf, " %.*g", options.precision, v);
      out << buf;
    }
    out << '\n';
  }
}

void write_vectors(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                   const WriteVectorsOptions& options) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vectors " + path.string());
  write_vectors(out, matrix, options);
}

}  // namespace clinli::emb
