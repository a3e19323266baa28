#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hopman {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

// Error taxonomy. ConfigError maps to CLI exit code 2 (usage/prerequisite),
// everything else to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct PlacementError : Error {
  using Error::Error;
};
struct StalenessError : Error {
  using Error::Error;
};

inline constexpr const char* kArtifactVersion = "hopman-0.1.0";

}  // namespace hopman
