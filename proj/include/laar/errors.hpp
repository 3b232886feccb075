#pragma once

#include <stdexcept>

namespace laar {

/// Unreadable or unwritable file.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file content or an out-of-range value.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inputs that parse but do not fit together (missing profile rows, unknown models, ...).
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace laar
