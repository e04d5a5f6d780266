#include "pslvqa/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "pslvqa/parser.hpp"

namespace pslvqa {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::vector<double>* EmbeddingStore::find(std::string_view word) const {
  auto it = vectors.find(lower(word));
  return it == vectors.end() ? nullptr : &it->second;
}

EmbeddingStore parse_embeddings(std::string_view text, std::string name,
                                std::vector<std::string>* warnings) {
  EmbeddingStore store;
  store.name = std::move(name);
  std::size_t line_no = 0;
  bool first = true;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      std::size_t count = 0, dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], dim)) {
        store.dimension = dim;
        continue;
      }
    }
    std::size_t dim = fields.size() - 1;
    if (dim == 0) {
      ++store.malformed_lines;
      if (warnings) warnings->push_back("line " + std::to_string(line_no) + ": no vector values");
      continue;
    }
    if (store.dimension == 0) store.dimension = dim;
    if (dim != store.dimension)
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(store.dimension) + " values, found " + std::to_string(dim));
    std::vector<double> vec(dim);
    bool ok = true;
    for (std::size_t k = 0; k < dim && ok; ++k) ok = parse_double(fields[k + 1], vec[k]);
    if (!ok) {
      ++store.malformed_lines;
      if (warnings) warnings->push_back("line " + std::to_string(line_no) + ": malformed vector");
      continue;
    }
    std::string word = lower(fields[0]);
    auto [it, inserted] = store.vectors.insert_or_assign(word, std::move(vec));
    if (!inserted && warnings)
      warnings->push_back("line " + std::to_string(line_no) + ": duplicate word '" + word +
                          "', last occurrence wins");
  }
  if (store.vectors.empty()) throw Error("embedding file contains no vectors");
  return store;
}

EmbeddingStore load_embeddings(const std::string& path, std::string name,
                               std::vector<std::string>* warnings) {
  if (name.empty()) name = path;
  return parse_embeddings(read_file(path), std::move(name), warnings);
}

std::vector<std::string> tokenize(std::string_view phrase) {
  std::vector<std::string> out;
  for (std::string_view t : split_ws(phrase)) out.push_back(lower(t));
  return out;
}

std::string normalize_phrase(std::string_view phrase) {
  std::string out;
  for (const std::string& t : tokenize(phrase)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::optional<std::vector<double>> phrase_vector(const EmbeddingStore& store,
                                                 std::span<const std::string> tokens) {
  // Sorting makes the floating-point sum independent of token order.
  std::vector<std::string> sorted;
  for (const std::string& t : tokens) sorted.push_back(lower(t));
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> sum(store.dimension, 0.0);
  std::size_t known = 0;
  for (const std::string& t : sorted) {
    auto it = store.vectors.find(t);
    if (it == store.vectors.end()) continue;
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += it->second[k];
    ++known;
  }
  if (known == 0) return std::nullopt;
  for (double& v : sum) v /= static_cast<double>(known);
  return sum;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

StubTable StubTable::parse(std::string_view text) {
  StubTable table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.starts_with('#') || line.starts_with("//")) continue;
    std::size_t p1 = line.find('|');
    std::size_t p2 = p1 == std::string_view::npos ? p1 : line.find('|', p1 + 1);
    if (p2 == std::string_view::npos || line.find('|', p2 + 1) != std::string_view::npos)
      throw Error("similarity table line " + std::to_string(line_no) +
                  ": expected 'phrase | phrase | value'");
    double value = 0.0;
    if (!parse_double(trim(line.substr(p2 + 1)), value) || value < 0.0 || value > 1.0)
      throw Error("similarity table line " + std::to_string(line_no) +
                  ": value must be a number in [0,1]");
    table.set(trim(line.substr(0, p1)), trim(line.substr(p1 + 1, p2 - p1 - 1)), value);
  }
  return table;
}

StubTable StubTable::load(const std::string& path) { return parse(read_file(path)); }

void StubTable::set(std::string_view a, std::string_view b, double value) {
  std::string na = normalize_phrase(a), nb = normalize_phrase(b);
  if (nb < na) std::swap(na, nb);
  if (table_.insert_or_assign({na, nb}, value).second) {
    ++phrases_[na];
    ++phrases_[nb];
  }
}

std::optional<double> StubTable::find(std::string_view a, std::string_view b) const {
  std::string na = normalize_phrase(a), nb = normalize_phrase(b);
  if (nb < na) std::swap(na, nb);
  auto it = table_.find({na, nb});
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

void StubTable::merge(const StubTable& other) {
  for (const auto& [key, v] : other.table_) set(key.first, key.second, v);
}

bool StubTable::mentions(std::string_view phrase) const {
  return phrases_.contains(normalize_phrase(phrase));
}

void SimilarityOracle::add_store(EmbeddingStore store) {
  if (stores_.size() == 2) throw Error("at most two embedding stores are supported");
  stores_.push_back(std::move(store));
}

PreparedPhrase SimilarityOracle::prepare(std::string_view phrase) const {
  PreparedPhrase p;
  p.text = normalize_phrase(phrase);
  auto tokens = tokenize(phrase);
  for (const EmbeddingStore& s : stores_) p.vectors.push_back(phrase_vector(s, tokens));
  return p;
}

double SimilarityOracle::similarity(const PreparedPhrase& a, const PreparedPhrase& b) const {
  if (auto v = stub_.find(a.text, b.text)) return *v;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t s = 0; s < stores_.size(); ++s) {
    if (s >= a.vectors.size() || s >= b.vectors.size()) break;
    if (!a.vectors[s] || !b.vectors[s]) continue;
    sum += std::clamp(cosine(*a.vectors[s], *b.vectors[s]), 0.0, 1.0);
    ++used;
  }
  if (used == 0) return a.text == b.text ? 1.0 : 0.0;
  return sum / static_cast<double>(used);
}

double SimilarityOracle::similarity(std::string_view a, std::string_view b) const {
  return similarity(prepare(a), prepare(b));
}

bool SimilarityOracle::covers(const PreparedPhrase& phrase) const {
  if (phrase.text.empty()) return false;
  if (stub_.mentions(phrase.text)) return true;
  for (const auto& v : phrase.vectors)
    if (v) return true;
  return false;
}

}  // namespace pslvqa
