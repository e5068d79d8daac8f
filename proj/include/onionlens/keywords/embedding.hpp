#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "onionlens/error.hpp"

namespace onionlens::keywords {

class EmbeddingFormatError : public Error {
 public:
  EmbeddingFormatError(std::size_t line, const std::string& detail)
      : Error("embedding file line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Static word vectors keyed by lowercase token.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dim_(dimension) {}

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return index_.size(); }
  bool contains(std::string_view token) const;
  /// Case-insensitive; nullopt for out-of-vocabulary tokens.
  std::optional<std::span<const float>> lookup(std::string_view token) const;

  /// Throws std::invalid_argument on a dimension mismatch. The first
  /// insertion of a token wins.
  void insert(std::string_view token, std::span<const float> vector);

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

/// GloVe-style text: "token f1 f2 ... fD" per line, D taken from the first
/// line. Blank lines are skipped; ragged or non-numeric lines are rejected.
EmbeddingTable parse_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Mean of the in-vocabulary vectors, L2-normalized. `embeddable` is false
/// when nothing was found or the mean vanished.
struct TermVector {
  std::vector<float> values;
  bool embeddable = false;
};

TermVector embed_tokens(std::span<const std::string> tokens, const EmbeddingTable& table);
/// Splits `term` on spaces first.
TermVector embed_term(std::string_view term, const EmbeddingTable& table);
TermVector embed_doc(std::span<const std::string> tokens, const EmbeddingTable& table);

/// Cosine similarity; 0 when either side has zero norm.
double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace onionlens::keywords
