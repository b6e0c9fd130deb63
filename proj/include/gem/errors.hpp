#ifndef GEM_ERRORS_HPP
#define GEM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gem {

// Caller passed something invalid (bad dimension, out-of-range class index, ...).
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric procedure failed (non-finite function value, eigensolver stall, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A file did not match its expected on-disk format.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Remote endpoint unreachable / kept failing after retries.
class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

// Remote endpoint answered, but the payload violates the wire protocol.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gem

#endif  // GEM_ERRORS_HPP
