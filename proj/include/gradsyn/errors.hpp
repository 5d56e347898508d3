#pragma once

#include <stdexcept>

namespace gradsyn {

/// Base class of all errors thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An argument lies outside its documented domain.
struct InvalidInputError : Error {
  using Error::Error;
};

/// A node id or lookup key is not present in the graph.
struct NotFoundError : Error {
  using Error::Error;
};

/// An operation was applied to a node in the wrong lifecycle state.
struct StateError : Error {
  using Error::Error;
};

/// A data file could not be parsed.
struct ParseError : Error {
  using Error::Error;
};

/// Exact enumeration refused because the graph exceeds the guard size.
struct EnumerationLimitError : Error {
  using Error::Error;
};

}  // namespace gradsyn
