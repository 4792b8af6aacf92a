#pragma once

#include "zest/transport.hpp"

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace zest {

/// One frame observed on an in-memory network.
struct TraceEvent {
    enum class Kind { Request, Reply, Push, Connect };

    Kind kind;
    /// Names of the sending and receiving transports.
    std::string from;
    std::string to;
    std::string endpoint;
};

/// Shared registry that in-memory transports bind to and connect through.
/// Every frame crossing it is recorded so tests can check who talked to whom.
class MemoryNetwork {
public:
    MemoryNetwork() = default;
    MemoryNetwork(const MemoryNetwork&) = delete;
    MemoryNetwork& operator=(const MemoryNetwork&) = delete;

    std::vector<TraceEvent> trace() const;
    void clear_trace();
    /// Recording costs a lock per frame; benchmarks switch it off.
    void set_tracing(bool enabled);

    struct ReplyState;
    struct RouterState;

private:
    friend class MemoryTransport;
    friend class MemoryReplyEndpoint;
    friend class MemoryRouterEndpoint;
    friend class MemoryDealer;

    void record(TraceEvent event);

    mutable std::mutex mutex_;
    std::condition_variable changed_;
    std::map<std::string, std::shared_ptr<ReplyState>> replies_;
    std::map<std::string, std::shared_ptr<RouterState>> routers_;
    std::vector<TraceEvent> trace_;
    bool tracing_ = true;
};

/// Deterministic unencrypted transport for tests and embedding. Each
/// participant owns a MemoryTransport named after it; the name doubles as
/// its credential.
class MemoryTransport final : public Transport {
public:
    MemoryTransport(MemoryNetwork& network, std::string name);

    const std::string& name() const { return name_; }

    std::unique_ptr<ReplyEndpoint> serve_reply(const EndpointAddress& address,
                                               RequestHandler handler) override;
    std::unique_ptr<RouterEndpoint> serve_router(const EndpointAddress& address) override;
    Bytes request(const EndpointAddress& address, std::string_view frame,
                  Milliseconds timeout) override;
    std::unique_ptr<DealerConnection> connect_dealer(const EndpointAddress& address,
                                                     std::string_view identity,
                                                     Milliseconds timeout) override;
    std::string public_key() const override;

private:
    MemoryNetwork& network_;
    std::string name_;
};

}  // namespace zest
