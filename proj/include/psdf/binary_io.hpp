#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace psdf::io {

namespace detail {
template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xff));
    }
    return out;
  }
  return v;
}
}  // namespace detail

/// Writes values as little-endian IEEE floats of width sizeof(Stored).
template <typename Stored, typename T>
void write_le(std::ostream& out, std::span<const T> values) {
  static_assert(sizeof(Stored) == 4 || sizeof(Stored) == 8);
  using Bits = std::conditional_t<sizeof(Stored) == 4, std::uint32_t, std::uint64_t>;
  std::vector<Bits> buffer(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    buffer[i] = detail::to_little(std::bit_cast<Bits>(static_cast<Stored>(values[i])));
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(Bits)));
}

/// Reads `count` little-endian floats of width sizeof(Stored); returns false
/// on short reads.
template <typename Stored, typename T, typename Alloc>
bool read_le(std::istream& in, std::size_t count, std::vector<T, Alloc>& values) {
  using Bits = std::conditional_t<sizeof(Stored) == 4, std::uint32_t, std::uint64_t>;
  std::vector<Bits> buffer(count);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(count * sizeof(Bits)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(Bits)) return false;
  values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = static_cast<T>(std::bit_cast<Stored>(detail::to_little(buffer[i])));
  }
  return true;
}

}  // namespace psdf::io
