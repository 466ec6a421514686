// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace score {

// Stable error taxonomy; the values are mirrored by the C API status codes.
enum class ErrorCode : int {
    invalid_argument = 1,
    data_integrity = 2,
    symmetry_violation = 3,
    degenerate_spectrum = 4,
    io_error = 5,
    contract_violation = 6,
    proto_timeout = 7,
    proto_malformed = 8,
    proto_version_mismatch = 9,
    proto_shape_mismatch = 10,
    proto_truncated = 11,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

}  // namespace score
