#pragma once

#include <cstdint>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "reorder/error.hpp"

namespace reorder::binary {

// Little-endian fixed-width primitives. The host is assumed little-endian
// (checked at compile time). Readers throw ValidationError on short reads.

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (in.gcount() != static_cast<std::streamsize>(sizeof v)) {
    throw ValidationError(std::string("truncated file while reading ") + what);
  }
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, const char* what, std::uint32_t limit = 1u << 24) {
  const auto len = get<std::uint32_t>(in, what);
  if (len > limit) throw ValidationError(std::string("implausible string length in ") + what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (in.gcount() != static_cast<std::streamsize>(len)) {
    throw ValidationError(std::string("truncated file while reading ") + what);
  }
  return s;
}

}  // namespace reorder::binary
