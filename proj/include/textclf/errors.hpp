#pragma once

#include <stdexcept>
#include <string>

namespace textclf {

// Shape or argument violations in numeric code.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid run configuration: bad flags, missing input paths, contradictory options.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files: TSV records, embedding tables, checkpoints, contextual dumps.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite math was expected (diverged training, bad input).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace textclf
