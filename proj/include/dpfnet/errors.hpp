#pragma once

#include <stdexcept>
#include <string>

namespace dpfnet {

// Unreadable files, malformed datasets, bad checkpoints. CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf reached a place it must never be (gradient, loss). CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dpfnet
