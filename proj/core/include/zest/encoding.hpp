#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace zest {

std::string to_hex(std::string_view bytes);
/// Strict lowercase hex; rejects odd lengths and any other character.
std::optional<std::string> from_hex(std::string_view hex);

std::string to_base64(std::string_view bytes);
std::optional<std::string> from_base64(std::string_view text);

/// Random version-4 UUID, lowercase and hyphenated.
std::string make_uuid();

std::string random_bytes(std::size_t count);

}  // namespace zest
