#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "clinli/embeddings/embedding_matrix.hpp"

namespace clinli::emb {

/// Text vector format: an optional header line "<count> <dim>", then one line
/// per token: the token followed by `dim` space-separated numbers. A first
/// line made of exactly two integers is always read as the header. Throws
/// ParseError (with line number) on inconsistent width, unparsable numbers,
/// duplicate tokens or a header count that disagrees with the body.
EmbeddingMatrix read_vectors(std::istream& in, std::string provenance = "");
EmbeddingMatrix read_vectors(const std::filesystem::path& path);

struct WriteVectorsOptions {
  bool header = true;
  // Significant digits per component; 17 round-trips every double exactly.
  int precision = 17;
};

/// Subword tables are not part of the text format and are not written.
void write_vectors(std::ostream& out, const EmbeddingMatrix& matrix, const WriteVectorsOptions& options = {});
void write_vectors(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                   const WriteVectorsOptions& options = {});

}  // namespace clinli::emb
