#pragma once

#include <optional>
#include <string>

#include "textclf/model.hpp"
#include "textclf/textprep.hpp"

namespace textclf {

struct LoadedCheckpoint {
  Model model;
  std::optional<Vocab> vocab;
};

// Binary checkpoint ("TXCKPT01", see docs/formats.md): canonical model-config
// JSON plus its digest, an optional vocabulary section, every named parameter
// as f64 little-endian, and a trailing whole-file checksum. Writes go through
// a temp file + rename so a crash never leaves a partial checkpoint behind.
void save_checkpoint(const Model& model, const Vocab* vocab, const std::string& path);

// Truncated or corrupted files raise DataError naming the byte offset; a
// config whose digest disagrees with the stored one raises DataError naming
// both digests. When expected is given, any config mismatch is an error.
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const std::optional<ModelSpec>& expected = std::nullopt);

}  // namespace textclf
