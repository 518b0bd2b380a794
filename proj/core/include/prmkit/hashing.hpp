#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace prmkit {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Compact dump with sorted object keys; nulls are kept as explicit markers.
std::string canonical_dump(const nlohmann::json& doc);

inline std::string canonical_hash(const nlohmann::json& doc) { return sha256_hex(canonical_dump(doc)); }

// splitmix64 step; used wherever a seed must be derived deterministically.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace prmkit
