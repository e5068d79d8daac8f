#include "onionlens/keywords/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace onionlens::keywords {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

bool EmbeddingTable::contains(std::string_view token) const { return index_.contains(lower(token)); }

std::optional<std::span<const float>> EmbeddingTable::lookup(std::string_view token) const {
  auto it = index_.find(lower(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(data_.data() + it->second * dim_, dim_);
}

void EmbeddingTable::insert(std::string_view token, std::span<const float> vector) {
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_ || dim_ == 0)
    throw std::invalid_argument("embedding for '" + std::string(token) + "' has dimension " +
                                std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
  auto [it, fresh] = index_.emplace(lower(token), index_.size());
  if (!fresh) return;
  data_.insert(data_.end(), vector.begin(), vector.end());
}

EmbeddingTable parse_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++lineno;
    const auto parts = fields(line);
    if (parts.empty()) continue;
    if (parts.size() < 2) throw EmbeddingFormatError(lineno, "expected a token followed by numbers");
    const std::size_t dim = parts.size() - 1;
    if (table.dimension() != 0 && dim != table.dimension())
      throw EmbeddingFormatError(lineno, "ragged line: " + std::to_string(dim) + " values, expected " +
                                             std::to_string(table.dimension()));
    vec.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const auto f = parts[i + 1];
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), vec[i]);
      if (ec != std::errc{} || end != f.data() + f.size() || !std::isfinite(vec[i]))
        throw EmbeddingFormatError(lineno, "bad number '" + std::string(f) + "'");
    }
    table.insert(parts[0], vec);
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path.string());
  return parse_embeddings(in);
}

TermVector embed_tokens(std::span<const std::string> tokens, const EmbeddingTable& table) {
  TermVector out;
  out.values.assign(table.dimension(), 0.0f);
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t found = 0;
  for (const auto& t : tokens) {
    const auto v = table.lookup(t);
    if (!v) continue;
    ++found;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
  }
  if (found == 0) return out;
  double norm = 0.0;
  for (double& s : sum) {
    s /= static_cast<double>(found);
    norm += s * s;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-9) return out;
  for (std::size_t i = 0; i < sum.size(); ++i) out.values[i] = static_cast<float>(sum[i] / norm);
  out.embeddable = true;
  return out;
}

TermVector embed_term(std::string_view term, const EmbeddingTable& table) {
  std::vector<std::string> tokens;
  for (auto f : fields(term)) tokens.emplace_back(f);
  return embed_tokens(tokens, table);
}

TermVector embed_doc(std::span<const std::string> tokens, const EmbeddingTable& table) {
  return embed_tokens(tokens, table);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace onionlens::keywords
