#pragma once

#include <string_view>

namespace zest {

/// Absolute, slash-separated, no whitespace or control characters.
bool is_valid_path(std::string_view path);

/// Wildcard rule shared by path caveats and observation patterns: a pattern
/// ending in "/*" matches every path beginning with the text before the
/// '*', a bare "*" matches everything, anything else must match exactly.
bool path_matches(std::string_view pattern, std::string_view path);

/// True when every path matched by `requested` is also matched by `granted`.
bool pattern_covers(std::string_view granted, std::string_view requested);

}  // namespace zest
