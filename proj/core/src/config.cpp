#include "zest/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace zest {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, T min, T max)
{
    T out{};
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (value.empty() || ec != std::errc{} || end != value.data() + value.size() || out < min || out > max) {
        throw ConfigError("bad value for " + std::string(key) + ": " + std::string(value));
    }
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, std::string_view value)
{
    std::filesystem::path p{std::string(value)};
    return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

ServiceConfig ServiceConfig::parse(std::string_view text, const std::filesystem::path& base)
{
    ServiceConfig config;
    bool have_secret = false;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (key == "name") {
            config.name = value;
        } else if (key == "host") {
            config.host = value;
        } else if (key == "reply_port") {
            config.reply_port = parse_number<int>(key, value, 1, 65535);
        } else if (key == "router_port") {
            config.router_port = parse_number<int>(key, value, 1, 65535);
        } else if (key == "secret_file") {
            config.secret_file = resolve(base, value);
            have_secret = true;
        } else if (key == "key_file") {
            config.key_file = resolve(base, value);
        } else if (key == "data_dir") {
            config.data_dir = resolve(base, value);
        } else if (key == "max_payload") {
            config.max_payload = parse_number<std::size_t>(key, value, 1, 1u << 30);
        } else if (key.starts_with("target.") && key.size() > 7) {
            config.targets[std::string(key.substr(7))] = resolve(base, value);
        } else if (key.starts_with("credential.") && key.size() > 11) {
            config.credentials[std::string(key.substr(11))] = value;
        } else {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + std::string(key));
        }
    }
    if (config.name.empty()) throw ConfigError("missing name");
    if (!have_secret) throw ConfigError("missing secret_file");
    if (config.reply_port == config.router_port) throw ConfigError("reply_port and router_port must differ");
    return config;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), file.parent_path());
}

std::string read_secret(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read secret " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto secret = buffer.str();
    if (secret.ends_with('\n')) secret.pop_back();
    if (secret.empty()) throw ConfigError("empty secret in " + file.string());
    return secret;
}

}  // namespace zest
