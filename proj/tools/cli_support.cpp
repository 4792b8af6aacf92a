#include "cli_support.hpp"

#include "zest/client.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace zest::cli {

ZestUri parse_uri(std::string_view text)
{
    constexpr std::string_view scheme = "zest://";
    if (!text.starts_with(scheme)) throw UsageError("uri must start with zest://");
    auto rest = text.substr(scheme.size());
    const auto slash = rest.find('/');
    if (slash == std::string_view::npos) throw UsageError("uri has no path: " + std::string(text));
    const auto authority = rest.substr(0, slash);
    const auto colon = authority.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw UsageError("uri needs host:port: " + std::string(text));
    }
    ZestUri uri;
    uri.host = authority.substr(0, colon);
    const auto digits = authority.substr(colon + 1);
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), uri.port);
    if (digits.empty() || ec != std::errc{} || end != digits.data() + digits.size() || uri.port <= 0 ||
        uri.port > 65535) {
        throw UsageError("bad port in uri: " + std::string(text));
    }
    uri.path = rest.substr(slash);
    return uri;
}

std::string read_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw UsageError("cannot read " + file.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Bytes load_payload(std::string_view source)
{
    if (source.starts_with('@')) return read_file(std::string(source.substr(1)));
    return Bytes(source);
}

std::string status_line(Code code)
{
    return std::to_string(static_cast<int>(code)) + " " + std::string(code_meaning(code));
}

int exit_status_for(Code code) { return is_success(code) ? kExitSuccess : kExitRejected; }

}  // namespace zest::cli
