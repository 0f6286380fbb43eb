#ifndef FIELDROAD_OUTPUT_HPP
#define FIELDROAD_OUTPUT_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace fieldroad {

/// Round-trip formatting with 17 significant digits, fixed across runs.
std::string format_double(double value);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

/// Library version stamped into every emitted table.
std::string_view artifact_version();

}  // namespace fieldroad

#endif  // FIELDROAD_OUTPUT_HPP
