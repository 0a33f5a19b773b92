#pragma once

#include <stdexcept>
#include <string>

namespace sdr {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments or malformed data: shapes, ranges, unparsable input.
struct validation_error : error {
  using error::error;
};

// Covariate sample too degenerate to whiten (rank deficiency, wild scaling).
struct degenerate_design_error : error {
  using error::error;
};

// The requested pivot rows cannot be normalized to an identity block.
struct pivot_error : error {
  using error::error;
};

// File system and serialization failures.
struct io_error : error {
  using error::error;
};

}  // namespace sdr
