#include "zest/path.hpp"

namespace zest {

namespace {

bool is_wildcard(std::string_view pattern)
{
    return pattern == "*" || pattern.ends_with("/*");
}

}  // namespace

bool is_valid_path(std::string_view path)
{
    if (path.empty() || path.front() != '/') return false;
    for (char c : path) {
        if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return false;
    }
    return true;
}

bool path_matches(std::string_view pattern, std::string_view path)
{
    if (pattern == "*") return true;
    if (pattern.ends_with("/*")) {
        return path.starts_with(pattern.substr(0, pattern.size() - 1));
    }
    return pattern == path;
}

bool pattern_covers(std::string_view granted, std::string_view requested)
{
    if (!is_wildcard(requested)) return path_matches(granted, requested);
    if (granted == "*") return true;
    if (requested == "*") return false;
    if (!is_wildcard(granted)) return false;
    // Both are prefix patterns: the requested prefix must extend the granted one.
    return requested.substr(0, requested.size() - 1)
        .starts_with(granted.substr(0, granted.size() - 1));
}

}  // namespace zest
