#include "cli_support.hpp"

#include "zest/arbiter.hpp"
#include "zest/client.hpp"
#include "zest/config.hpp"
#include "zest/store.hpp"
#include "zest/tokens.hpp"
#include "zest/zmq_transport.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

using namespace zest;
using namespace zest::cli;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted = true; }

struct RequestOptions {
    std::string uri;
    std::string token_file;
    std::string format = "json";
    std::string payload;
    std::string server_key;
    std::string key_file;
    std::string output;
    std::string observe;
    std::uint32_t max_age = kDefaultMaxAgeSeconds;
    int router_port = 0;
    int timeout_ms = 5000;
};

struct ServeOptions {
    std::string kind;
    std::string config;
};

struct MintOptions {
    std::string secret_file;
    std::string identifier;
    std::string location;
    std::string target;
    std::string method;
    std::string path;
    std::string output;
};

void add_request_options(CLI::App* cmd, RequestOptions& o, bool with_payload)
{
    cmd->add_option("uri", o.uri, "zest://host:port/path")->required();
    cmd->add_option("--token", o.token_file, "File holding a serialized token");
    cmd->add_option("--format", o.format, "Content format")
        ->check(CLI::IsMember({"text", "binary", "json"}));
    if (with_payload) cmd->add_option("--payload", o.payload, "Payload STRING or @FILE");
    cmd->add_option("--server-key", o.server_key, "Server CURVE public key (hex or Z85)")->required();
    cmd->add_option("--key", o.key_file, "Client key pair file (default: ephemeral)");
    cmd->add_option("--router-port", o.router_port, "Router port (default: uri port + 1)");
    cmd->add_option("--timeout", o.timeout_ms, "Request timeout in ms")->check(CLI::PositiveNumber);
    cmd->add_option("-o,--output", o.output, "Write the payload to FILE instead of stdout");
}

std::unique_ptr<ZmqTransport> make_client_transport(const RequestOptions& o)
{
    return std::make_unique<ZmqTransport>(o.key_file.empty() ? CurveKeyPair::generate()
                                                             : CurveKeyPair::load(o.key_file));
}

Client make_client(Transport& transport, const RequestOptions& o, const ZestUri& uri)
{
    const auto key = normalize_public_key(o.server_key);
    const int router_port = o.router_port ? o.router_port : uri.port + 1;
    return Client(transport, EndpointAddress::network(uri.host, uri.port, key),
                  EndpointAddress::network(uri.host, router_port, key), uri.host, Milliseconds(o.timeout_ms));
}

std::string load_token(const RequestOptions& o)
{
    if (o.token_file.empty()) return {};
    return read_file(o.token_file);
}

ContentFormat parse_format(std::string_view name)
{
    const auto format = content_format_from_name(name);
    if (!format) throw UsageError("unknown format " + std::string(name));
    return *format;
}

int run_observe(const RequestOptions& o)
{
    const auto uri = parse_uri(o.uri);
    const auto mode = observe_mode_from_name(o.observe);
    if (!mode) throw UsageError("observe mode must be data, audit or notify");
    auto transport = make_client_transport(o);
    auto client = make_client(*transport, o, uri);

    const auto started = std::chrono::steady_clock::now();
    std::optional<Observation> observation;
    try {
        observation.emplace(client.observe(uri.path, *mode, o.max_age, load_token(o), parse_format(o.format)));
    } catch (const RequestRejected& e) {
        std::cout << status_line(e.code()) << std::endl;
        return kExitRejected;
    }

    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);
    const auto deadline = started + std::chrono::seconds(o.max_age);
    while (!g_interrupted) {
        auto wait = Milliseconds(100);
        if (o.max_age > 0) {
            const auto left = std::chrono::duration_cast<Milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left <= Milliseconds(0)) break;
            wait = std::min(wait, left);
        }
        if (auto line = observation->next_line(wait)) {
            std::cout << *line << '\n' << std::flush;
        }
    }
    return kExitSuccess;
}

int run_request(Code method, const RequestOptions& o)
{
    if (!o.observe.empty()) {
        if (method != Code::Get) throw UsageError("--observe only applies to get");
        return run_observe(o);
    }
    const auto uri = parse_uri(o.uri);
    const auto format = parse_format(o.format);
    const auto payload = load_payload(o.payload);
    if (format == ContentFormat::Binary && !o.payload.empty() && !o.payload.starts_with('@')) {
        throw UsageError("binary payloads must be given as @FILE");
    }
    auto transport = make_client_transport(o);
    auto client = make_client(*transport, o, uri);
    const auto response = client.send(method, uri.path, load_token(o), format, payload);

    std::cout << status_line(response.code) << '\n';
    if (!response.payload.empty()) {
        if (!o.output.empty() && is_success(response.code)) {
            std::ofstream out(o.output, std::ios::binary | std::ios::trunc);
            out << response.payload;
            if (!out) throw UsageError("cannot write " + o.output);
        } else {
            std::cout << response.payload << '\n';
        }
    }
    std::cout << std::flush;
    return exit_status_for(response.code);
}

void write_text(const std::filesystem::path& file, std::string_view text)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw ConfigError("cannot write " + file.string());
}

CurveKeyPair node_keys(const ServiceConfig& config)
{
    if (config.key_file && std::filesystem::exists(*config.key_file)) return CurveKeyPair::load(*config.key_file);
    auto keys = CurveKeyPair::generate();
    if (config.key_file) keys.save(*config.key_file);
    return keys;
}

void wait_for_signal()
{
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int signal = 0;
    sigwait(&set, &signal);
    spdlog::info("received signal {}, shutting down", signal);
}

int run_serve(const ServeOptions& o)
{
    const auto config = ServiceConfig::load(o.config);
    const auto secret = read_secret(config.secret_file);
    ZmqTransport transport(node_keys(config));
    SystemClock clock;

    NodeConfig node;
    node.name = config.name;
    node.root_secret = secret;
    node.reply_address = EndpointAddress::network(config.host, config.reply_port);
    node.router_address = EndpointAddress::network(config.host, config.router_port);
    node.max_payload = config.max_payload;

    // Threads started below inherit the blocked mask, so sigwait sees the signals.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    const auto announce = [&] {
        std::cout << "serving " << o.kind << " " << config.name << " reply=" << node.reply_address.str()
                  << " router=" << node.router_address.str() << " public_key=" << transport.public_key()
                  << std::endl;
    };

    if (o.kind == "store") {
        StoreConfig store_config{node, config.data_dir};
        if (config.data_dir) std::filesystem::create_directories(*config.data_dir);
        Store store(std::move(store_config), transport, clock);
        store.start();
        announce();
        wait_for_signal();
        store.stop();
        return kExitSuccess;
    }

    ArbiterConfig arbiter_config{node, {}, {}};
    for (const auto& [name, file] : config.targets) arbiter_config.target_secrets[name] = read_secret(file);
    for (const auto& [name, key] : config.credentials) {
        arbiter_config.credentials[normalize_public_key(key)] = name;
    }
    Arbiter arbiter(std::move(arbiter_config), transport, clock);

    const auto token_dir = config.data_dir.value_or(std::filesystem::current_path());
    std::filesystem::create_directories(token_dir);
    for (const auto& [method, token] : arbiter.manager_tokens()) {
        auto name = std::string(method_name(method));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        const auto file = token_dir / (config.name + "-manager-" + name + ".token");
        write_text(file, serialize(token));
        std::cout << "manager token " << method_name(method) << " " << file.string() << '\n';
    }
    arbiter.start();
    announce();
    wait_for_signal();
    arbiter.stop();
    return kExitSuccess;
}

int run_keygen(const std::string& file)
{
    const auto keys = CurveKeyPair::generate();
    keys.save(file);
    std::cout << keys.public_key << std::endl;
    return kExitSuccess;
}

int run_mint(const MintOptions& o)
{
    const auto method = method_from_name(o.method);
    if (!method) throw UsageError("method must be GET, POST or DELETE");
    const auto secret = read_secret(o.secret_file);
    const auto token = mint_scoped(secret, o.identifier, o.location.empty() ? o.target : o.location, o.target,
                                   *method, o.path);
    if (o.output.empty()) {
        std::cout << serialize(token);
    } else {
        write_text(o.output, serialize(token));
    }
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Zest protocol client and node launcher"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log protocol details to stderr");

    RequestOptions request;
    auto* post = app.add_subcommand("post", "POST a payload");
    add_request_options(post, request, true);
    auto* get = app.add_subcommand("get", "GET a resource");
    add_request_options(get, request, false);
    get->add_option("--observe", request.observe, "Observe instead: data, audit or notify");
    get->add_option("--max-age", request.max_age, "Observation lifetime in seconds (0 = forever)");
    auto* del = app.add_subcommand("delete", "DELETE a resource");
    add_request_options(del, request, false);
    auto* observe = app.add_subcommand("observe", "Stream observation events to stdout");
    add_request_options(observe, request, false);
    observe->add_option("--observe", request.observe, "data, audit or notify (default: data)");
    observe->add_option("--max-age", request.max_age, "Observation lifetime in seconds (0 = forever)");

    ServeOptions serve_options;
    auto* serve = app.add_subcommand("serve", "Run a store or arbiter node");
    serve->add_option("kind", serve_options.kind)->required()->check(CLI::IsMember({"store", "arbiter"}));
    serve->add_option("config", serve_options.config, "key=value config file")->required();

    std::string key_file;
    auto* keygen = app.add_subcommand("keygen", "Generate a CURVE key pair file");
    keygen->add_option("file", key_file)->required();

    MintOptions mint_options;
    auto* mint_cmd = app.add_subcommand("mint", "Mint a scoped token from a root secret");
    mint_cmd->add_option("--secret-file", mint_options.secret_file)->required();
    mint_cmd->add_option("--identifier", mint_options.identifier)->required();
    mint_cmd->add_option("--location", mint_options.location, "Default: the target");
    mint_cmd->add_option("--target", mint_options.target)->required();
    mint_cmd->add_option("--method", mint_options.method)->required();
    mint_cmd->add_option("--path", mint_options.path)->required();
    mint_cmd->add_option("-o,--output", mint_options.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    auto logger = spdlog::stderr_color_mt("zest");
    spdlog::set_default_logger(logger);
    spdlog::set_level(verbose || serve->parsed() ? spdlog::level::info : spdlog::level::warn);

    try {
        if (post->parsed()) return run_request(Code::Post, request);
        if (get->parsed()) return run_request(Code::Get, request);
        if (del->parsed()) return run_request(Code::Delete, request);
        if (observe->parsed()) {
            if (request.observe.empty()) request.observe = "data";
            return run_observe(request);
        }
        if (serve->parsed()) return run_serve(serve_options);
        if (keygen->parsed()) return run_keygen(key_file);
        if (mint_cmd->parsed()) return run_mint(mint_options);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const MalformedMessage& e) {
        std::cerr << "malformed response: " << e.what() << '\n';
        return kExitTransport;
    } catch (const RequestRejected& e) {
        std::cout << status_line(e.code()) << std::endl;
        return kExitRejected;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
