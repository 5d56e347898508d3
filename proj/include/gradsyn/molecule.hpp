#pragma once

#include <compare>
#include <string>
#include <utility>

namespace gradsyn {

/// A molecule identified by its canonical text form. The engine treats the
/// string as opaque: equality is exact text equality, nothing is ever
/// re-canonicalized.
struct Molecule {
  std::string canonical;

  Molecule() = default;
  explicit Molecule(std::string text) : canonical(std::move(text)) {}

  friend bool operator==(const Molecule&, const Molecule&) = default;
  friend std::strong_ordering operator<=>(const Molecule&, const Molecule&) = default;
};

}  // namespace gradsyn
