#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ncelab {

using WordId = std::uint32_t;
using ContextId = std::uint32_t;

/// One observed (context, word) event. Context ids range over 0..|V|, where
/// |V| is the reserved begin-of-sequence context.
struct Pair {
  ContextId context;
  WordId word;

  friend bool operator==(const Pair&, const Pair&) = default;
};

inline constexpr ContextId bos_context(std::size_t vocab_size) {
  return static_cast<ContextId>(vocab_size);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file, flag or argument value.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ncelab
