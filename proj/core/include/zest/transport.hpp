#pragma once

#include "zest/codec.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace zest {

using Milliseconds = std::chrono::milliseconds;

struct EndpointAddress {
    enum class Scheme { Memory, Network };

    Scheme scheme = Scheme::Memory;
    /// Registry key for in-memory endpoints, hostname or IP otherwise.
    std::string host;
    int port = 0;
    /// Z85 CURVE public key of the server; only used by network clients.
    std::string server_key;

    static EndpointAddress memory(std::string name);
    static EndpointAddress network(std::string host, int port, std::string server_key = {});

    /// Accepts "mem://<name>" and "tcp://<host>:<port>".
    static EndpointAddress parse(std::string_view text);

    EndpointAddress with_key(std::string key) const;
    std::string str() const;

    bool operator==(const EndpointAddress&) const = default;
};

/// Who sent a request. On the network transport this is the client's CURVE
/// public key (Z85); in memory it is the sending transport's name.
struct PeerInfo {
    std::string credential;
};

using RequestHandler = std::function<Bytes(std::string_view frame, const PeerInfo& peer)>;

enum class DeliveryResult {
    Delivered,
    /// No connection with this identity has ever been seen.
    UnknownIdentity,
    /// The identity was connected once but is gone now.
    Disconnected,
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

class BindError : public TransportError {
public:
    using TransportError::TransportError;
};

class ReplyEndpoint {
public:
    virtual ~ReplyEndpoint() = default;
    virtual const EndpointAddress& address() const = 0;
    /// Stops accepting requests; idempotent.
    virtual void stop() = 0;
};

class RouterEndpoint {
public:
    virtual ~RouterEndpoint() = default;
    virtual const EndpointAddress& address() const = 0;
    /// Delivers `frame` to the single connection registered under
    /// `identity`. Frames pushed to one identity arrive in push order.
    /// Safe to call from any thread.
    virtual DeliveryResult push(std::string_view identity, Bytes frame) = 0;
    virtual void stop() = 0;
};

/// Client side of a router endpoint. Not thread-safe.
class DealerConnection {
public:
    virtual ~DealerConnection() = default;
    virtual const std::string& identity() const = 0;
    /// Next pushed frame, or nullopt if none arrives within `timeout`.
    virtual std::optional<Bytes> receive(Milliseconds timeout) = 0;
};

class Transport {
public:
    virtual ~Transport() = default;

    virtual std::unique_ptr<ReplyEndpoint> serve_reply(const EndpointAddress& address,
                                                       RequestHandler handler) = 0;
    virtual std::unique_ptr<RouterEndpoint> serve_router(const EndpointAddress& address) = 0;

    /// Sends one frame and waits for its single reply. Throws TimeoutError.
    virtual Bytes request(const EndpointAddress& address, std::string_view frame,
                          Milliseconds timeout) = 0;

    /// Connects to a router endpoint under `identity`. Returns once the
    /// router has registered the identity, so pushes issued afterwards are
    /// routable. Throws TimeoutError when the router does not answer.
    virtual std::unique_ptr<DealerConnection> connect_dealer(const EndpointAddress& address,
                                                             std::string_view identity,
                                                             Milliseconds timeout) = 0;

    /// Key advertised to observers in the public_key option.
    virtual std::string public_key() const = 0;
};

}  // namespace zest
