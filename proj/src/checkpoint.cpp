#include "textclf/checkpoint.hpp"

#include <cstdio>

#include "binio.hpp"
#include "textclf/errors.hpp"

namespace textclf {

namespace {
constexpr char kMagic[] = "TXCKPT01";
}

void save_checkpoint(const Model& model, const Vocab* vocab, const std::string& path) {
  const ModelSpec& spec = model.spec();
  std::string spec_json = spec.to_json();

  std::string buf;
  buf.append(kMagic, 8);
  binio::append_u64(buf, spec.digest());
  binio::append_u32(buf, static_cast<std::uint32_t>(spec_json.size()));
  buf += spec_json;

  buf.push_back(vocab ? 1 : 0);
  if (vocab) {
    binio::append_u64(buf, vocab->words.size());
    for (const std::string& w : vocab->words) {
      binio::append_u32(buf, static_cast<std::uint32_t>(w.size()));
      buf += w;
    }
  }

  const ParamStore& ps = model.params();
  binio::append_u64(buf, ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const NamedParam& p = ps.at(i);
    binio::append_u32(buf, static_cast<std::uint32_t>(p.name.size()));
    buf += p.name;
    binio::append_u32(buf, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape) binio::append_u64(buf, d);
    buf.push_back(p.kernel ? 1 : 0);
    for (double v : p.value.values) binio::append_f64(buf, v);
  }

  binio::append_u64(buf, binio::fnv1a64(buf.data(), buf.size()));
  binio::write_file_atomic(path, buf);
}

LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const std::optional<ModelSpec>& expected) {
  std::string buf = binio::read_file(path);
  binio::Cursor cur{buf, 0, path};

  if (cur.read_bytes(8) != std::string(kMagic, 8))
    throw DataError(path + ": not a checkpoint file (bad magic)");

  std::uint64_t stored_digest = cur.read_u64();
  std::uint32_t json_len = cur.read_u32();
  std::string spec_json = cur.read_bytes(json_len);
  ModelSpec spec = ModelSpec::from_json(spec_json);
  if (spec.digest() != stored_digest)
    throw DataError(path + ": spec digest mismatch — stored " +
                    [&] {
                      char b[17];
                      std::snprintf(b, sizeof b, "%016llx",
                                    static_cast<unsigned long long>(stored_digest));
                      return std::string(b);
                    }() +
                    ", recomputed " + spec.digest_hex());
  if (expected && expected->digest() != spec.digest())
    throw DataError(path + ": checkpoint spec " + spec.digest_hex() +
                    " does not match the expected spec " + expected->digest_hex());

  LoadedCheckpoint out;
  if (cur.read_bytes(1)[0] != 0) {
    std::uint64_t n = cur.read_u64();
    Vocab v;
    v.words.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint32_t len = cur.read_u32();
      v.words.push_back(cur.read_bytes(len));
    }
    for (std::size_t i = 0; i < v.words.size(); ++i) v.index[v.words[i]] = static_cast<int>(i);
    out.vocab = std::move(v);
  }

  // Rebuild the architecture, then overwrite every parameter from the file.
  RngStream rng(0, 0);
  out.model = Model::build(spec, rng);
  ParamStore& ps = out.model.params();

  std::uint64_t count = cur.read_u64();
  if (count != ps.size())
    throw DataError(path + ": checkpoint holds " + std::to_string(count) +
                    " parameters, the architecture has " + std::to_string(ps.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t name_len = cur.read_u32();
    std::string name = cur.read_bytes(name_len);
    NamedParam& p = ps.at(static_cast<std::size_t>(i));
    if (name != p.name)
      throw DataError(path + ": parameter " + std::to_string(i) + " is '" + name +
                      "', expected '" + p.name + "'");
    std::uint32_t rank = cur.read_u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(cur.read_u64());
    if (shape != p.value.shape)
      throw DataError(path + ": parameter '" + name + "' has shape " + shape_str(shape) +
                      ", expected " + shape_str(p.value.shape));
    bool kernel = cur.read_bytes(1)[0] != 0;
    if (kernel != p.kernel)
      throw DataError(path + ": parameter '" + name + "' kernel flag mismatch");
    for (double& v : p.value.values) v = cur.read_f64();
  }

  std::size_t body = cur.pos;
  std::uint64_t stored_sum = cur.read_u64();
  std::uint64_t actual_sum = binio::fnv1a64(buf.data(), body);
  if (stored_sum != actual_sum)
    throw DataError(path + ": checksum mismatch (file corrupt)");
  if (cur.pos != buf.size())
    throw DataError(path + ": " + std::to_string(buf.size() - cur.pos) +
                    " trailing bytes after the checksum");
  return out;
}

}  // namespace textclf
