#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace socgen {

enum class Errc {
  kIndexError,
  kDuplicateEdge,
  kSelfLoop,
  kDimensionError,
  kCapacityError,
  kTypeError,
  kEmptyGraph,
  kSchemaError,
  kInsufficientData,
  kValueError,
  kStateError,
  kEmptyData,
  kParseError,
  kIoError,
};

std::string_view errc_name(Errc code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report it as structured JSON.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace socgen
