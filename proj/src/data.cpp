#include "textclf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "textclf/errors.hpp"

namespace textclf {

LabelSchema LabelSchema::for_task(char task) {
  LabelSchema s;
  s.task = task;
  switch (task) {
    case 'A': s.labels = {"OFF", "NOT"}; break;
    case 'B': s.labels = {"TIN", "UNT"}; break;
    case 'C': s.labels = {"IND", "GRP", "OTH"}; break;
    default: throw ConfigError(std::string("unknown sub-task '") + task + "' (use A, B, or C)");
  }
  return s;
}

int LabelSchema::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(schema_.labels.size(), 0);
  for (const DataRecord& r : records_) {
    int idx = schema_.index_of(r.label);
    if (idx >= 0) ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

namespace {
std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}
}  // namespace

Dataset load_tsv(const std::string& path, const LabelSchema& schema, bool labeled) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");

  Dataset data(schema, labeled);
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  std::size_t want = labeled ? 3 : 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != want)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(want) +
                      " tab-separated fields, got " + std::to_string(fields.size()));
    DataRecord r;
    r.id = trim(fields[0]);
    r.text = fields[1];
    if (r.id.empty())
      throw DataError(path + ":" + std::to_string(lineno) + ": empty record id");
    if (labeled) {
      r.label = trim(fields[2]);
      if (schema.index_of(r.label) < 0)
        throw DataError(path + ":" + std::to_string(lineno) + ": label '" + r.label +
                        "' is not in the sub-task " + std::string(1, schema.task) + " schema");
    }
    if (!seen.insert(r.id).second)
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate id '" + r.id + "'");
    data.append(std::move(r));
  }
  return data;
}

void write_tsv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const DataRecord& r : data.records()) {
    out << r.id << '\t' << r.text;
    if (data.labeled()) out << '\t' << r.label;
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double val_fraction,
                                             RngStream& rng) {
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw ConfigError("stratified_split: fraction must lie strictly between 0 and 1");
  const LabelSchema& schema = data.schema();

  std::vector<std::vector<std::size_t>> by_class(schema.labels.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    int idx = schema.index_of(data.records()[i].label);
    if (idx < 0) throw DataError("stratified_split: unlabeled record '" + data.records()[i].id + "'");
    by_class[static_cast<std::size_t>(idx)].push_back(i);
  }

  std::vector<bool> in_val(data.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty())
      throw DataError("stratified_split: class '" + schema.labels[c] + "' has no records");
    // Round half away from zero, then clamp into the class size.
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) * val_fraction + 0.5));
    n_val = std::min(n_val, members.size());
    rng.shuffle(members);
    for (std::size_t k = 0; k < n_val; ++k) in_val[members[k]] = true;
  }

  Dataset train(schema, data.labeled());
  Dataset val(schema, data.labeled());
  for (std::size_t i = 0; i < data.size(); ++i)
    (in_val[i] ? val : train).append(data.records()[i]);
  return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------------------
// Scoring.
// ---------------------------------------------------------------------------

namespace {
struct F1 {
  double precision, recall, f1;
};

F1 f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  double p = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  double r = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  return {p, r, f};
}
}  // namespace

MetricsReport score(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
                    const LabelSchema& schema) {
  if (preds.size() != golds.size())
    throw DataError("score: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(golds.size()) + " gold labels");
  std::size_t k = schema.labels.size();
  MetricsReport rep;
  rep.total = preds.size();
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));

  for (std::size_t i = 0; i < preds.size(); ++i) {
    int g = schema.index_of(golds[i]);
    int p = schema.index_of(preds[i]);
    if (g < 0) throw DataError("score: gold label '" + golds[i] + "' outside the schema");
    if (p < 0) throw DataError("score: predicted label '" + preds[i] + "' outside the schema");
    ++rep.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
  }

  std::size_t correct = 0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = rep.confusion[c][c];
    std::size_t fp = 0, fn = 0, support = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o != c) {
        fp += rep.confusion[o][c];
        fn += rep.confusion[c][o];
      }
      support += rep.confusion[c][o];
    }
    correct += tp;
    F1 m = f1_from_counts(tp, fp, fn);
    rep.per_class.push_back({schema.labels[c], m.precision, m.recall, m.f1, support});
    f1_sum += m.f1;
  }
  rep.macro_f1 = f1_sum / static_cast<double>(k);
  rep.accuracy = rep.total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(rep.total);
  return rep;
}

double macro_f1_indices(const std::vector<int>& preds, const std::vector<int>& golds,
                        std::size_t num_classes) {
  if (preds.size() != golds.size())
    throw DataError("macro_f1_indices: prediction/gold length mismatch");
  std::vector<std::vector<std::size_t>> conf(num_classes,
                                             std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (golds[i] < 0 || preds[i] < 0 || static_cast<std::size_t>(golds[i]) >= num_classes ||
        static_cast<std::size_t>(preds[i]) >= num_classes)
      throw DataError("macro_f1_indices: class index outside [0, " +
                      std::to_string(num_classes) + ")");
    ++conf[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(preds[i])];
  }
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = conf[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      if (o == c) continue;
      fp += conf[o][c];
      fn += conf[c][o];
    }
    f1_sum += f1_from_counts(tp, fp, fn).f1;
  }
  return f1_sum / static_cast<double>(num_classes);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["labels"] = nlohmann::ordered_json::array();
  j["per_class"] = nlohmann::ordered_json::array();
  j["support"] = nlohmann::ordered_json::array();
  for (const ClassMetrics& c : per_class) {
    j["labels"].push_back(c.label);
    nlohmann::ordered_json e;
    e["label"] = c.label;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["support"] = c.support;
    j["per_class"].push_back(e);
    j["support"].push_back(c.support);
  }
  j["macro_f1"] = macro_f1;
  j["accuracy"] = accuracy;
  j["confusion"] = confusion;
  j["total"] = total;
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "class       precision  recall     f1         support\n";
  for (const ClassMetrics& c : per_class) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-11s %-10.4f %-10.4f %-10.4f %zu\n", c.label.c_str(),
                  c.precision, c.recall, c.f1, c.support);
    os << buf;
  }
  char tail[96];
  std::snprintf(tail, sizeof tail, "macro_f1 %.4f  accuracy %.4f  total %zu\n", macro_f1,
                accuracy, total);
  os << tail;
  return os.str();
}

}  // namespace textclf
