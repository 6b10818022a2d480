#pragma once

#include <stdexcept>
#include <string>

namespace pqtls {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An algorithm wire code or name that is not in the registry (or is
// registered with the other kind).
class UnknownAlgorithmError : public Error {
 public:
  using Error::Error;
};

// An input byte string whose length does not match the scheme metadata.
class WrongLengthError : public Error {
 public:
  using Error::Error;
};

// NTT applied to a polynomial already in the requested domain.
class DomainMismatchError : public Error {
 public:
  using Error::Error;
};

// WOTS chain advanced past w-1.
class ChainOverflowError : public Error {
 public:
  using Error::Error;
};

// Stateful signature key has no unused leaves left.
class StateExhaustedError : public Error {
 public:
  using Error::Error;
};

// Malformed wire bytes; maps to an Alert with code decode_error.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Invalid local configuration or bench plan (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Socket-level failure: refused, timeout, unexpected EOF (CLI exit code 3).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace pqtls
