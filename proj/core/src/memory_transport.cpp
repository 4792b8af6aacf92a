#include "zest/memory_transport.hpp"

#include <deque>
#include <set>

namespace zest {

struct MemoryNetwork::ReplyState {
    std::string owner;
    RequestHandler handler;
};

namespace {

struct Mailbox {
    std::string peer;
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Bytes> frames;
};

const std::string& memory_key(const EndpointAddress& address)
{
    if (address.scheme != EndpointAddress::Scheme::Memory) {
        throw TransportError("in-memory transport cannot use " + address.str());
    }
    return address.host;
}

}  // namespace

struct MemoryNetwork::RouterState {
    std::string owner;
    std::mutex mutex;
    std::map<std::string, std::shared_ptr<Mailbox>, std::less<>> peers;
    std::set<std::string, std::less<>> seen;
};

std::vector<TraceEvent> MemoryNetwork::trace() const
{
    std::lock_guard lock(mutex_);
    return trace_;
}

void MemoryNetwork::clear_trace()
{
    std::lock_guard lock(mutex_);
    trace_.clear();
}

void MemoryNetwork::set_tracing(bool enabled)
{
    std::lock_guard lock(mutex_);
    tracing_ = enabled;
}

void MemoryNetwork::record(TraceEvent event)
{
    std::lock_guard lock(mutex_);
    if (tracing_) trace_.push_back(std::move(event));
}

class MemoryReplyEndpoint final : public ReplyEndpoint {
public:
    MemoryReplyEndpoint(MemoryNetwork& network, EndpointAddress address)
        : network_(network), address_(std::move(address))
    {
    }
    ~MemoryReplyEndpoint() override { stop(); }

    const EndpointAddress& address() const override { return address_; }

    void stop() override
    {
        std::lock_guard lock(network_.mutex_);
        if (stopped_) return;
        stopped_ = true;
        network_.replies_.erase(address_.host);
    }

private:
    MemoryNetwork& network_;
    EndpointAddress address_;
    bool stopped_ = false;
};

class MemoryRouterEndpoint final : public RouterEndpoint {
public:
    MemoryRouterEndpoint(MemoryNetwork& network, EndpointAddress address,
                         std::shared_ptr<MemoryNetwork::RouterState> state)
        : network_(network), address_(std::move(address)), state_(std::move(state))
    {
    }
    ~MemoryRouterEndpoint() override { stop(); }

    const EndpointAddress& address() const override { return address_; }

    DeliveryResult push(std::string_view identity, Bytes frame) override
    {
        std::shared_ptr<Mailbox> box;
        {
            std::lock_guard lock(state_->mutex);
            const auto it = state_->peers.find(identity);
            if (it == state_->peers.end()) {
                return state_->seen.contains(identity) ? DeliveryResult::Disconnected
                                                       : DeliveryResult::UnknownIdentity;
            }
            box = it->second;
            // Enqueue under the router lock so concurrent pushers to one
            // identity keep their order.
            std::lock_guard box_lock(box->mutex);
            box->frames.push_back(std::move(frame));
        }
        box->ready.notify_one();
        network_.record({TraceEvent::Kind::Push, state_->owner, box->peer, address_.str()});
        return DeliveryResult::Delivered;
    }

    void stop() override
    {
        std::lock_guard lock(network_.mutex_);
        if (stopped_) return;
        stopped_ = true;
        network_.routers_.erase(address_.host);
    }

private:
    MemoryNetwork& network_;
    EndpointAddress address_;
    std::shared_ptr<MemoryNetwork::RouterState> state_;
    bool stopped_ = false;
};

class MemoryDealer final : public DealerConnection {
public:
    MemoryDealer(std::string identity, std::shared_ptr<MemoryNetwork::RouterState> router,
                 std::shared_ptr<Mailbox> box)
        : identity_(std::move(identity)), router_(std::move(router)), box_(std::move(box))
    {
    }

    ~MemoryDealer() override
    {
        std::lock_guard lock(router_->mutex);
        const auto it = router_->peers.find(identity_);
        if (it != router_->peers.end() && it->second == box_) router_->peers.erase(it);
    }

    const std::string& identity() const override { return identity_; }

    std::optional<Bytes> receive(Milliseconds timeout) override
    {
        std::unique_lock lock(box_->mutex);
        if (!box_->ready.wait_for(lock, timeout, [&] { return !box_->frames.empty(); })) {
            return std::nullopt;
        }
        auto frame = std::move(box_->frames.front());
        box_->frames.pop_front();
        return frame;
    }

private:
    std::string identity_;
    std::shared_ptr<MemoryNetwork::RouterState> router_;
    std::shared_ptr<Mailbox> box_;
};

MemoryTransport::MemoryTransport(MemoryNetwork& network, std::string name)
    : network_(network), name_(std::move(name))
{
}

std::unique_ptr<ReplyEndpoint> MemoryTransport::serve_reply(const EndpointAddress& address,
                                                            RequestHandler handler)
{
    const auto& key = memory_key(address);
    {
        std::lock_guard lock(network_.mutex_);
        if (network_.replies_.contains(key)) throw BindError("address in use: " + address.str());
        network_.replies_[key] =
            std::make_shared<MemoryNetwork::ReplyState>(MemoryNetwork::ReplyState{name_, std::move(handler)});
    }
    network_.changed_.notify_all();
    return std::make_unique<MemoryReplyEndpoint>(network_, address);
}

std::unique_ptr<RouterEndpoint> MemoryTransport::serve_router(const EndpointAddress& address)
{
    const auto& key = memory_key(address);
    auto state = std::make_shared<MemoryNetwork::RouterState>();
    state->owner = name_;
    {
        std::lock_guard lock(network_.mutex_);
        if (network_.routers_.contains(key)) throw BindError("address in use: " + address.str());
        network_.routers_[key] = state;
    }
    network_.changed_.notify_all();
    return std::make_unique<MemoryRouterEndpoint>(network_, address, std::move(state));
}

Bytes MemoryTransport::request(const EndpointAddress& address, std::string_view frame,
                               Milliseconds timeout)
{
    const auto& key = memory_key(address);
    std::shared_ptr<MemoryNetwork::ReplyState> endpoint;
    {
        std::unique_lock lock(network_.mutex_);
        const bool found = network_.changed_.wait_for(lock, timeout, [&] {
            const auto it = network_.replies_.find(key);
            if (it == network_.replies_.end()) return false;
            endpoint = it->second;
            return true;
        });
        if (!found) throw TimeoutError("no reply from " + address.str());
    }
    const auto where = address.str();
    network_.record({TraceEvent::Kind::Request, name_, endpoint->owner, where});
    auto reply = endpoint->handler(frame, PeerInfo{name_});
    network_.record({TraceEvent::Kind::Reply, endpoint->owner, name_, where});
    return reply;
}

std::unique_ptr<DealerConnection> MemoryTransport::connect_dealer(const EndpointAddress& address,
                                                                  std::string_view identity,
                                                                  Milliseconds timeout)
{
    if (identity.empty()) throw TransportError("dealer identity must not be empty");
    const auto& key = memory_key(address);
    std::shared_ptr<MemoryNetwork::RouterState> router;
    {
        std::unique_lock lock(network_.mutex_);
        const bool found = network_.changed_.wait_for(lock, timeout, [&] {
            const auto it = network_.routers_.find(key);
            if (it == network_.routers_.end()) return false;
            router = it->second;
            return true;
        });
        if (!found) throw TimeoutError("no router at " + address.str());
    }
    auto box = std::make_shared<Mailbox>();
    box->peer = name_;
    {
        std::lock_guard lock(router->mutex);
        if (router->peers.contains(identity)) {
            throw TransportError("identity already connected: " + std::string(identity));
        }
        router->peers.emplace(std::string(identity), box);
        router->seen.emplace(identity);
    }
    network_.record({TraceEvent::Kind::Connect, name_, router->owner, address.str()});
    return std::make_unique<MemoryDealer>(std::string(identity), std::move(router), std::move(box));
}

std::string MemoryTransport::public_key() const
{
    return "mem:" + name_;
}

}  // namespace zest
