#include "socgen/error.hpp"

namespace socgen {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kIndexError: return "IndexError";
    case Errc::kDuplicateEdge: return "DuplicateEdge";
    case Errc::kSelfLoop: return "SelfLoop";
    case Errc::kDimensionError: return "DimensionError";
    case Errc::kCapacityError: return "CapacityError";
    case Errc::kTypeError: return "TypeError";
    case Errc::kEmptyGraph: return "EmptyGraph";
    case Errc::kSchemaError: return "SchemaError";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kValueError: return "ValueError";
    case Errc::kStateError: return "StateError";
    case Errc::kEmptyData: return "EmptyData";
    case Errc::kParseError: return "ParseError";
    case Errc::kIoError: return "IoError";
  }
  return "Error";
}

}  // namespace socgen
