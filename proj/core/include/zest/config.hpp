#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace zest {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat key=value node configuration. Blank lines and lines starting with
/// '#' are skipped; relative file paths resolve against the config file's
/// directory.
///
///   name=store1
///   host=0.0.0.0
///   reply_port=5555
///   router_port=5556
///   secret_file=store1.secret
///   key_file=store1.key
///   data_dir=store1-data
///   max_payload=65536
///   target.store1=store1.secret        (arbiter: secret of each target)
///   credential.logger=<z85 or hex key> (arbiter: requester keys)
struct ServiceConfig {
    std::string name;
    std::string host = "127.0.0.1";
    int reply_port = 5555;
    int router_port = 5556;
    std::filesystem::path secret_file;
    std::optional<std::filesystem::path> key_file;
    std::optional<std::filesystem::path> data_dir;
    std::size_t max_payload = 65536;
    std::map<std::string, std::filesystem::path> targets;
    std::map<std::string, std::string> credentials;

    static ServiceConfig parse(std::string_view text, const std::filesystem::path& base = {});
    static ServiceConfig load(const std::filesystem::path& file);
};

/// Reads a secret file, dropping one trailing newline.
std::string read_secret(const std::filesystem::path& file);

}  // namespace zest
