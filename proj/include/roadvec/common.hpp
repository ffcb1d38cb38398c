#pragma once

#include <stdexcept>

namespace roadvec {

// Execution policy for the data-parallel kernels. Every kernel taking an
// Exec keeps a serial reference path; the parallel path must produce the
// identical result (asserted in the unit tests and by the bench tool).
enum class Exec { serial, parallel };

struct param_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sampling window with zero pixels (segment outside the image, etc.).
struct no_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct pipeline_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace roadvec
