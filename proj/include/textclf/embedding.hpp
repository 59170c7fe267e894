#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "textclf/rng.hpp"

namespace textclf {

struct DataRecord;  // data.hpp
class Dataset;

// Word -> dense vector table, immutable after load.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim);

  void add(const std::string& word, std::vector<double> vec);  // first wins
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const double* vector_of(std::size_t i) const { return data_.data() + i * dim_; }
  std::optional<std::size_t> find(const std::string& word) const;
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

// word2vec text format: optional "count dim" header, then one word and dim
// decimal numbers per line. Duplicate words keep the first occurrence and
// record a warning; dimension inconsistencies and non-numeric fields raise
// DataError with the line number.
EmbeddingTable load_embeddings(const std::string& path,
                               std::optional<std::size_t> expected_dim = std::nullopt);

double cosine_similarity(const double* a, const double* b, std::size_t dim);

// Similarity of `query` against every table row. Serial reference and the
// OpenMP twin are bitwise identical (one independent output per row).
std::vector<double> cosine_scores_serial(const EmbeddingTable& table, const double* query);
std::vector<double> cosine_scores_parallel(const EmbeddingTable& table, const double* query);

struct Neighbor {
  std::string word;
  double cosine;
};

// Exact top-k by cosine over the whole vocabulary, the query word excluded;
// ties broken by ascending word. Throws DataError for unknown words.
std::vector<Neighbor> nearest_neighbors(const std::string& word, const EmbeddingTable& table,
                                        std::size_t k);

struct SynonymEntry {
  std::string replacement;
  double cosine;
};

// source word -> single best replacement; ordered map so exports and
// iteration are deterministic.
struct SynonymTable {
  std::map<std::string, SynonymEntry> entries;

  bool contains(const std::string& w) const { return entries.count(w) != 0; }
  std::size_t size() const { return entries.size(); }
};

// For each of the top_n most frequent in-vocabulary corpus tokens, keep its
// nearest neighbor when the cosine reaches min_cos. Frequency ties break by
// ascending word. Empty corpora are rejected.
SynonymTable build_synonym_table(const Dataset& corpus, const EmbeddingTable& table,
                                 std::size_t top_n, double min_cos);

// "source<TAB>replacement<TAB>cosine" lines.
void write_synonym_table(const SynonymTable& table, const std::string& path);

struct AugmentPolicy {
  enum class Kind { replace_all, per_tweet_max };
  Kind kind = Kind::replace_all;
  std::size_t max_per_tweet = 1;  // per_tweet_max only

  static AugmentPolicy replace_all();
  static AugmentPolicy per_tweet_max(std::size_t k);
};

// One synthetic copy per record that contains at least one source word, with
// the substitutions applied, the label kept, and "-aug" appended to the id.
// Records without matches produce nothing. Token counts are preserved.
Dataset augment_corpus(const Dataset& data, const SynonymTable& synonyms,
                       const AugmentPolicy& policy, RngStream& rng);

}  // namespace textclf
