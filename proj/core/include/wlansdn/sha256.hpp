// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_SHA256_HPP
#define WLANSDN_SHA256_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace wlansdn {

/// FIPS 180-4 SHA-256 of the input bytes.
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> data);

/// Inverse of to_hex; returns false on odd length or non-hex characters.
bool from_hex(std::string_view text, std::span<std::uint8_t> out);

}  // namespace wlansdn

#endif  // WLANSDN_SHA256_HPP
