#pragma once

#include "zest/catalogue.hpp"
#include "zest/clock.hpp"
#include "zest/codec.hpp"
#include "zest/meta_record.hpp"
#include "zest/observation.hpp"
#include "zest/transport.hpp"

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace zest {

inline constexpr std::size_t kDefaultMaxPayload = 65536;
/// Path every node serves its HyperCat catalogue on.
inline constexpr std::string_view kCataloguePath = "/cat";

struct NodeConfig {
    /// Node identity; tokens must carry "target = <name>".
    std::string name;
    /// Key tokens presented to this node are verified with.
    std::string root_secret;
    EndpointAddress reply_address;
    EndpointAddress router_address;
    std::size_t max_payload = kDefaultMaxPayload;
    /// Period of the background expiry sweep; zero disables it.
    Milliseconds expiry_interval{1000};
};

/// A decoded request that passed validation and authorisation.
struct Request {
    Code method;
    std::string path;
    std::string host;
    ContentFormat format;
    const Bytes& payload;
    /// Identifier of the presented macaroon ("-" on credential routes).
    std::string token_id;
    PeerInfo peer;
};

struct Response {
    Code code = Code::AckPayload;
    std::optional<ContentFormat> format;
    Bytes payload;
    /// Sent as the public_key option when non-empty.
    std::string public_key;

    static Response ack_post() { return {Code::AckPost, std::nullopt, {}, {}}; }
    static Response ack_delete() { return {Code::AckDelete, std::nullopt, {}, {}}; }
    static Response with_payload(ContentFormat format, Bytes payload)
    {
        return {Code::AckPayload, format, std::move(payload), {}};
    }
    static Response error(Code code) { return {code, std::nullopt, {}, {}}; }
};

/// Raised by route handlers to answer with a specific error code.
class RequestError : public std::runtime_error {
public:
    RequestError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

using RouteHandler = std::function<Response(const Request&)>;

enum class RouteAccess {
    /// A macaroon minted for this node, method and path is required.
    Token,
    /// No macaroon; the handler authenticates the transport credential.
    Credential,
};

/// One line of the node's request log, produced for every inbound frame.
struct AuditEvent {
    Timestamp timestamp{0};
    std::string token_id;
    std::string method;
    std::string path;
    Code outcome = Code::BadRequest;
};

/// Counters used to check that no handler runs without authorisation.
struct NodeStats {
    std::uint64_t requests = 0;
    std::uint64_t authorized = 0;
    std::uint64_t handler_calls = 0;
};

/// Generic Zest node: request pipeline, token policy, observation registry,
/// event fan-out over the router endpoint and the /cat catalogue. Stores and
/// arbiters plug their behaviour in through routes.
class Node {
public:
    Node(NodeConfig config, Transport& transport, const Clock& clock);
    ~Node();
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    const NodeConfig& config() const { return config_; }
    const Clock& clock() const { return clock_; }

    /// Registers a handler for `method` on paths matching `pattern`. The
    /// first registered match wins. Routes must be added before start().
    void route(Code method, std::string pattern, RouteHandler handler,
               RouteAccess access = RouteAccess::Token);

    void set_catalogue_source(std::function<std::vector<CatalogueItem>()> source);
    /// Called once per inbound frame, after the response is decided.
    void set_audit_sink(std::function<void(const AuditEvent&)> sink);

    /// Binds the reply and router endpoints.
    void start();
    void stop();
    /// Further requests are answered with 163.
    void drain();

    /// Full request pipeline; always returns exactly one encoded response.
    Bytes handle_request(std::string_view raw, const PeerInfo& peer = {});

    /// Pushes `record` to every live observer of `kind` whose pattern
    /// matches record.uri_path. Returns the number of deliveries.
    std::size_t emit_event(const MetaRecord& record, ObserveMode kind);

    std::size_t expire_observations(Timestamp now);
    std::size_t expire_observations() { return expire_observations(clock_.now()); }

    ObservationRegistry& observations() { return observations_; }
    NodeStats stats() const;

private:
    struct Route {
        Code method;
        std::string pattern;
        RouteHandler handler;
        RouteAccess access;
    };

    Response process(const Message& request, const PeerInfo& peer, AuditEvent& audit);
    Response observe(const Message& request, const std::string& path, ObserveMode mode);
    const Route* find_route(Code method, std::string_view path) const;
    void record_audit(const AuditEvent& event);
    void run_expiry();

    NodeConfig config_;
    Transport& transport_;
    const Clock& clock_;
    std::vector<Route> routes_;
    std::function<std::vector<CatalogueItem>()> catalogue_source_;
    std::function<void(const AuditEvent&)> audit_sink_;
    ObservationRegistry observations_;

    std::unique_ptr<ReplyEndpoint> reply_;
    std::unique_ptr<RouterEndpoint> router_;
    std::atomic<bool> draining_{false};

    std::mutex expiry_mutex_;
    std::condition_variable expiry_wake_;
    bool expiry_stop_ = false;
    std::thread expiry_thread_;

    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> authorized_{0};
    std::atomic<std::uint64_t> handler_calls_{0};
};

/// Maps a request code onto its option-matrix column.
MessageKind request_kind(Code method);
/// Option-matrix column for a response to `method`.
MessageKind response_kind(Code method);

}  // namespace zest
