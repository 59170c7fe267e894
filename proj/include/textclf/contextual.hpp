#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textclf/tensor.hpp"

namespace textclf {

// One record of a precomputed contextual-embedding dump: a fixed-length
// [max_len x dim] matrix (zero-padded past true_len) keyed by the record id.
struct ContextualRecord {
  std::string id;
  std::uint32_t true_len = 0;  // frame-inclusive token count, <= max_len
  Tensor values;               // [max_len x dim]
};

// Binary container for contextual embeddings; layout documented in
// docs/formats.md ("TXCTX001"). All integers little-endian, payload f64.
class ContextualFile {
 public:
  ContextualFile() = default;
  ContextualFile(std::size_t dim, std::size_t max_len) : dim_(dim), max_len_(max_len) {}

  std::size_t dim() const { return dim_; }
  std::size_t max_len() const { return max_len_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<ContextualRecord>& records() const { return records_; }

  // Shape must be [max_len x dim]; duplicate ids raise DataError.
  void add(const std::string& id, std::uint32_t true_len, Tensor values);
  const ContextualRecord* find(const std::string& id) const;  // nullptr when absent

  void save(const std::string& path) const;
  static ContextualFile load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::size_t max_len_ = 0;
  std::vector<ContextualRecord> records_;
};

}  // namespace textclf
