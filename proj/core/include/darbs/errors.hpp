#pragma once

#include <stdexcept>
#include <string>

namespace darbs {

// Error classes map onto the CLI exit codes: usage errors are caught at the
// parser, numeric failures carry these types, I/O failures use io_error.
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_covariance : numeric_error {
    using numeric_error::numeric_error;
};

struct degenerate_density : numeric_error {
    using numeric_error::numeric_error;
};

struct calibration_failure : numeric_error {
    using numeric_error::numeric_error;
};

struct contract_violation : std::logic_error {
    using std::logic_error::logic_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace darbs
