#include "textclf/contextual.hpp"

#include "binio.hpp"
#include "textclf/errors.hpp"

namespace textclf {

namespace {
constexpr char kMagic[] = "TXCTX001";  // 8 bytes, no terminator stored
}

void ContextualFile::add(const std::string& id, std::uint32_t true_len, Tensor values) {
  if (values.rank() != 2 || values.shape[0] != max_len_ || values.shape[1] != dim_)
    throw DataError("contextual record '" + id + "': expected [" + std::to_string(max_len_) +
                    " x " + std::to_string(dim_) + "], got " + shape_str(values));
  if (true_len > max_len_)
    throw DataError("contextual record '" + id + "': true_len " + std::to_string(true_len) +
                    " exceeds max_len " + std::to_string(max_len_));
  if (find(id)) throw DataError("contextual record '" + id + "': duplicate id");
  records_.push_back({id, true_len, std::move(values)});
}

const ContextualRecord* ContextualFile::find(const std::string& id) const {
  for (const auto& r : records_)
    if (r.id == id) return &r;
  return nullptr;
}

void ContextualFile::save(const std::string& path) const {
  std::string buf;
  buf.append(kMagic, 8);
  binio::append_u32(buf, static_cast<std::uint32_t>(dim_));
  binio::append_u32(buf, static_cast<std::uint32_t>(max_len_));
  binio::append_u64(buf, records_.size());
  for (const auto& r : records_) {
    binio::append_u32(buf, static_cast<std::uint32_t>(r.id.size()));
    buf += r.id;
    binio::append_u32(buf, r.true_len);
    for (double v : r.values.values) binio::append_f64(buf, v);
  }
  binio::append_u64(buf, binio::fnv1a64(buf.data(), buf.size()));
  binio::write_file_atomic(path, buf);
}

ContextualFile ContextualFile::load(const std::string& path) {
  std::string buf = binio::read_file(path);
  binio::Cursor cur{buf, 0, path};

  if (cur.read_bytes(8) != std::string(kMagic, 8))
    throw DataError(path + ": not a contextual-embedding file (bad magic)");
  std::size_t dim = cur.read_u32();
  std::size_t max_len = cur.read_u32();
  if (dim == 0 || max_len == 0)
    throw DataError(path + ": zero dimension or max_len in header");
  std::uint64_t count = cur.read_u64();

  ContextualFile file(dim, max_len);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t id_len = cur.read_u32();
    std::string id = cur.read_bytes(id_len);
    std::uint32_t true_len = cur.read_u32();
    Tensor values = Tensor::zeros({max_len, dim});
    for (double& v : values.values) v = cur.read_f64();
    file.add(id, true_len, std::move(values));
  }

  std::size_t body = cur.pos;
  std::uint64_t stored = cur.read_u64();
  std::uint64_t actual = binio::fnv1a64(buf.data(), body);
  if (stored != actual)
    throw DataError(path + ": checksum mismatch (file corrupt)");
  if (cur.pos != buf.size())
    throw DataError(path + ": " + std::to_string(buf.size() - cur.pos) +
                    " trailing bytes after the checksum");
  return file;
}

}  // namespace textclf
