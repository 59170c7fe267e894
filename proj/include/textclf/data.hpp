#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "textclf/rng.hpp"

namespace textclf {

// Label sets for the three OLID sub-tasks. Index 0 is the positive class for
// the binary tasks (OFF, TIN). Matching is case-sensitive after trimming.
struct LabelSchema {
  char task = 'A';
  std::vector<std::string> labels;

  static LabelSchema for_task(char task);  // 'A' {OFF,NOT}, 'B' {TIN,UNT}, 'C' {IND,GRP,OTH}
  int index_of(const std::string& label) const;  // -1 when absent
  std::size_t num_classes() const { return labels.size(); }
  bool binary() const { return labels.size() == 2; }
  static constexpr int kPositive = 0;
};

struct DataRecord {
  std::string id;
  std::string text;
  std::string label;  // empty for unlabeled prediction input
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(LabelSchema schema, bool labeled) : schema_(std::move(schema)), labeled_(labeled) {}

  const LabelSchema& schema() const { return schema_; }
  bool labeled() const { return labeled_; }
  std::vector<DataRecord>& records() { return records_; }
  const std::vector<DataRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  void append(DataRecord r) { records_.push_back(std::move(r)); }
  std::vector<std::size_t> class_counts() const;  // aligned with schema labels

 private:
  LabelSchema schema_;
  bool labeled_ = true;
  std::vector<DataRecord> records_;
};

// Strict OLID-style TSV: "id<TAB>text<TAB>label" per line (no label column
// when labeled=false). Wrong field counts, labels outside the schema, and
// duplicate ids raise DataError naming the line.
Dataset load_tsv(const std::string& path, const LabelSchema& schema, bool labeled);
void write_tsv(const Dataset& data, const std::string& path);

// Per-class validation counts are round(count * fraction) (half away from
// zero); the split is disjoint, exhaustive, order-preserving, and a pure
// function of the rng seed. Classes with zero records are rejected.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double val_fraction,
                                             RngStream& rng);

struct ClassMetrics {
  std::string label;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;  // schema order
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]
  std::size_t total = 0;

  std::string to_json() const;  // keys: labels, per_class, macro_f1, accuracy, confusion, support
  std::string to_text() const;
};

// Per-class F1 with the 0/0 -> 0 convention; macro-F1 averages over every
// schema class, zero-support classes included.
MetricsReport score(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
                    const LabelSchema& schema);

// Same scoring on class indices; used by the trainer for validation macro-F1.
double macro_f1_indices(const std::vector<int>& preds, const std::vector<int>& golds,
                        std::size_t num_classes);

}  // namespace textclf
