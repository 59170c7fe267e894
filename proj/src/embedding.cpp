#include "textclf/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "textclf/data.hpp"
#include "textclf/errors.hpp"
#include "textclf/textprep.hpp"

namespace textclf {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {}

void EmbeddingTable::add(const std::string& word, std::vector<double> vec) {
  if (vec.size() != dim_)
    throw DataError("embedding '" + word + "': dimension " + std::to_string(vec.size()) +
                    " vs table dimension " + std::to_string(dim_));
  if (index_.count(word)) {
    warnings_.push_back("duplicate word '" + word + "' ignored (first occurrence kept)");
    return;
  }
  index_[word] = words_.size();
  words_.push_back(word);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingTable load_embeddings(const std::string& path, std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");

  std::string line;
  std::size_t lineno = 0;
  std::optional<EmbeddingTable> table;

  auto parse_number = [&](const std::string& field, double& out) {
    try {
      std::size_t used = 0;
      out = std::stod(field, &used);
      return used == field.size();
    } catch (const std::exception&) {
      return false;
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream is(line);
    std::vector<std::string> fields;
    std::string f;
    while (is >> f) fields.push_back(std::move(f));
    if (fields.empty()) continue;

    // Optional header: exactly two integer fields on the first line.
    if (lineno == 1 && fields.size() == 2) {
      double a = 0, b = 0;
      if (parse_number(fields[0], a) && parse_number(fields[1], b) && a == std::floor(a) &&
          b == std::floor(b) && b > 0) {
        table.emplace(static_cast<std::size_t>(b));
        continue;
      }
    }

    if (fields.size() < 2)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected a word and its vector");
    std::string word = fields[0];
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0;
      if (!parse_number(fields[i], v))
        throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric field '" +
                        fields[i] + "'");
      vec.push_back(v);
    }
    if (!table) table.emplace(vec.size());
    if (vec.size() != table->dim())
      throw DataError(path + ":" + std::to_string(lineno) + ": vector of dimension " +
                      std::to_string(vec.size()) + " in a " + std::to_string(table->dim()) +
                      "-dimensional table");
    table->add(word, std::move(vec));
  }

  if (!table || table->size() == 0) throw DataError("embedding file '" + path + "' is empty");
  if (expected_dim && table->dim() != *expected_dim)
    throw DataError("embedding file '" + path + "' has dimension " +
                    std::to_string(table->dim()) + ", expected " +
                    std::to_string(*expected_dim));
  return std::move(*table);
}

double cosine_similarity(const double* a, const double* b, std::size_t dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> cosine_scores_serial(const EmbeddingTable& table, const double* query) {
  std::vector<double> scores(table.size());
  for (std::size_t i = 0; i < table.size(); ++i)
    scores[i] = cosine_similarity(table.vector_of(i), query, table.dim());
  return scores;
}

std::vector<double> cosine_scores_parallel(const EmbeddingTable& table, const double* query) {
  std::vector<double> scores(table.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < static_cast<long long>(table.size()); ++i)
    scores[static_cast<std::size_t>(i)] =
        cosine_similarity(table.vector_of(static_cast<std::size_t>(i)), query, table.dim());
  return scores;
}

std::vector<Neighbor> nearest_neighbors(const std::string& word, const EmbeddingTable& table,
                                        std::size_t k) {
  auto qi = table.find(word);
  if (!qi) throw DataError("nearest_neighbors: word '" + word + "' not in the embedding table");
  if (k == 0) return {};

  std::vector<double> scores = cosine_scores_parallel(table, table.vector_of(*qi));
  std::vector<std::size_t> order;
  order.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i)
    if (i != *qi) order.push_back(i);

  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return table.words()[a] < table.words()[b];
                    });

  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({table.words()[order[i]], scores[order[i]]});
  return out;
}

AugmentPolicy AugmentPolicy::replace_all() { return {}; }

AugmentPolicy AugmentPolicy::per_tweet_max(std::size_t k) {
  AugmentPolicy p;
  p.kind = Kind::per_tweet_max;
  p.max_per_tweet = k;
  return p;
}

SynonymTable build_synonym_table(const Dataset& corpus, const EmbeddingTable& table,
                                 std::size_t top_n, double min_cos) {
  if (corpus.size() == 0) throw DataError("build_synonym_table: empty corpus");
  if (top_n == 0) throw ConfigError("build_synonym_table: top_n must be at least 1");
  if (min_cos < 0.0 || min_cos > 1.0)
    throw ConfigError("build_synonym_table: min_cos must lie in [0, 1]");

  std::map<std::string, std::size_t> freq;
  for (const DataRecord& r : corpus.records())
    for (const std::string& tok : tokenize(r.text))
      if (table.find(tok)) ++freq[tok];

  std::vector<std::pair<std::string, std::size_t>> ordered(freq.begin(), freq.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ordered.size() > top_n) ordered.resize(top_n);

  SynonymTable syn;
  for (const auto& [word, count] : ordered) {
    (void)count;
    std::vector<Neighbor> nn = nearest_neighbors(word, table, 1);
    if (nn.empty() || nn[0].cosine < min_cos || nn[0].word == word) continue;
    syn.entries[word] = {nn[0].word, nn[0].cosine};
  }
  return syn;
}

void write_synonym_table(const SynonymTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& [source, entry] : table.entries) {
    char cos[32];
    std::snprintf(cos, sizeof cos, "%.6f", entry.cosine);
    out << source << '\t' << entry.replacement << '\t' << cos << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

Dataset augment_corpus(const Dataset& data, const SynonymTable& synonyms,
                       const AugmentPolicy& policy, RngStream& rng) {
  Dataset out(data.schema(), data.labeled());
  for (const DataRecord& r : data.records()) {
    std::vector<std::string> toks = tokenize(r.text);
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < toks.size(); ++i)
      if (synonyms.contains(toks[i])) hits.push_back(i);
    if (hits.empty()) continue;

    if (policy.kind == AugmentPolicy::Kind::per_tweet_max && hits.size() > policy.max_per_tweet) {
      // Sample which occurrences to replace; selection order is rng-driven,
      // application order stays positional.
      rng.shuffle(hits);
      hits.resize(policy.max_per_tweet);
      std::sort(hits.begin(), hits.end());
    }
    for (std::size_t i : hits) toks[i] = synonyms.entries.at(toks[i]).replacement;

    DataRecord aug;
    aug.id = r.id + "-aug";
    aug.label = r.label;
    std::string text;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) text.push_back(' ');
      text += toks[i];
    }
    aug.text = std::move(text);
    out.append(std::move(aug));
  }
  return out;
}

}  // namespace textclf
