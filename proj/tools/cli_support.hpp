#pragma once

#include "zest/codec.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace zest::cli {

enum ExitStatus : int {
    kExitSuccess = 0,
    kExitRejected = 1,
    kExitTransport = 2,
    kExitUsage = 64,
    kExitFailure = 70,
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// zest://host:port/path
struct ZestUri {
    std::string host;
    int port = 0;
    std::string path;
};

ZestUri parse_uri(std::string_view text);

/// "STRING" literally, "@FILE" as the file's bytes.
Bytes load_payload(std::string_view source);
std::string read_file(const std::filesystem::path& file);

/// "<code> <meaning>"
std::string status_line(Code code);
int exit_status_for(Code code);

}  // namespace zest::cli
