#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sqlblock::text {

bool iequals(std::string_view a, std::string_view b) noexcept;
std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s) noexcept;
bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

// Splits on every occurrence of `sep`; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char sep);

// Orders strings ignoring ASCII case, falling back to byte order so that
// the ordering stays strict-weak and deterministic.
struct ILess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const noexcept;
};

// Ordering under which case variants are equivalent (for PHP names).
struct ICaseLess {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const noexcept;
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);

bool valid_utf8(std::string_view s) noexcept;

}  // namespace sqlblock::text
