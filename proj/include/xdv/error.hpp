// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace xdv {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied unusable data (empty corpus, unknown id, missing file...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An API precondition was violated (wrong variant, frozen tensor, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Serialized data is corrupt, truncated or from another format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace xdv
