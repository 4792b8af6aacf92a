#include "zest/zmq_transport.hpp"

#include "zest/encoding.hpp"

#include <spdlog/spdlog.h>
#include <sys/eventfd.h>
#include <unistd.h>
#include <zmq.h>

#include <atomic>
#include <cerrno>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

namespace zest {

namespace {

constexpr std::size_t kZ85KeyLength = 40;
constexpr std::size_t kBinaryKeyLength = 32;
constexpr long kServicePollMs = 100;

[[noreturn]] void throw_zmq(const std::string& what)
{
    throw TransportError(what + ": " + zmq_strerror(zmq_errno()));
}

class Socket {
public:
    Socket(void* context, int type) : handle_(zmq_socket(context, type))
    {
        if (!handle_) throw_zmq("zmq_socket");
        set_int(ZMQ_LINGER, 0);
    }
    ~Socket()
    {
        if (handle_) zmq_close(handle_);
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    void* get() const { return handle_; }

    void set_int(int option, int value)
    {
        if (zmq_setsockopt(handle_, option, &value, sizeof value) != 0) throw_zmq("zmq_setsockopt");
    }

    void set_bytes(int option, std::string_view value)
    {
        if (zmq_setsockopt(handle_, option, value.data(), value.size()) != 0) throw_zmq("zmq_setsockopt");
    }

    /// Z85 keys are passed with their terminating NUL, the form zmq expects.
    void set_key(int option, const std::string& z85)
    {
        if (z85.size() != kZ85KeyLength) throw TransportError("CURVE key must be 40 Z85 characters");
        if (zmq_setsockopt(handle_, option, z85.c_str(), z85.size() + 1) != 0) throw_zmq("zmq_setsockopt");
    }

    void make_curve_server(const CurveKeyPair& keys)
    {
        set_int(ZMQ_CURVE_SERVER, 1);
        set_key(ZMQ_CURVE_SECRETKEY, keys.secret_key);
    }

    void make_curve_client(const CurveKeyPair& keys, const std::string& server_key)
    {
        if (server_key.empty()) throw TransportError("network endpoints need the server's public key");
        set_key(ZMQ_CURVE_SERVERKEY, normalize_public_key(server_key));
        set_key(ZMQ_CURVE_PUBLICKEY, keys.public_key);
        set_key(ZMQ_CURVE_SECRETKEY, keys.secret_key);
    }

    void bind(const EndpointAddress& address)
    {
        if (zmq_bind(handle_, tcp_endpoint(address).c_str()) != 0) {
            throw BindError("cannot bind " + address.str() + ": " + zmq_strerror(zmq_errno()));
        }
    }

    void connect(const EndpointAddress& address)
    {
        if (zmq_connect(handle_, tcp_endpoint(address).c_str()) != 0) {
            throw_zmq("cannot connect " + address.str());
        }
    }

    bool send(std::string_view data, int flags = 0)
    {
        return zmq_send(handle_, data.data(), data.size(), flags) >= 0;
    }

    bool wait_readable(long timeout_ms)
    {
        zmq_pollitem_t item{handle_, 0, ZMQ_POLLIN, 0};
        const int rc = zmq_poll(&item, 1, timeout_ms);
        if (rc < 0 && zmq_errno() != EINTR) throw_zmq("zmq_poll");
        return rc > 0 && (item.revents & ZMQ_POLLIN);
    }

    static std::string tcp_endpoint(const EndpointAddress& address)
    {
        if (address.scheme != EndpointAddress::Scheme::Network) {
            throw TransportError("network transport cannot use " + address.str());
        }
        return address.str();
    }

private:
    void* handle_;
};

class Frame {
public:
    Frame() { zmq_msg_init(&msg_); }
    ~Frame() { zmq_msg_close(&msg_); }
    Frame(const Frame&) = delete;
    Frame& operator=(const Frame&) = delete;

    bool receive(Socket& socket, int flags = 0) { return zmq_msg_recv(&msg_, socket.get(), flags) >= 0; }
    std::string_view view() { return {static_cast<const char*>(zmq_msg_data(&msg_)), zmq_msg_size(&msg_)}; }
    bool more() { return zmq_msg_more(&msg_) != 0; }
    std::string property(const char* name)
    {
        const char* value = zmq_msg_gets(&msg_, name);
        return value ? std::string(value) : std::string();
    }

private:
    zmq_msg_t msg_;
};

/// Reads the remaining parts of a multipart message.
std::vector<Bytes> receive_parts(Socket& socket, Frame& first)
{
    std::vector<Bytes> parts{Bytes(first.view())};
    bool more = first.more();
    while (more) {
        Frame next;
        if (!next.receive(socket)) break;
        parts.emplace_back(next.view());
        more = next.more();
    }
    return parts;
}

std::string z85_encode(std::string_view binary)
{
    std::string out(binary.size() * 5 / 4 + 1, '\0');
    if (!zmq_z85_encode(out.data(), reinterpret_cast<const std::uint8_t*>(binary.data()), binary.size())) {
        throw std::invalid_argument("cannot Z85-encode key");
    }
    out.pop_back();
    return out;
}

}  // namespace

struct ZmqTransport::Context {
    void* handle = nullptr;
    CurveKeyPair keys;
    std::thread zap;

    std::mutex pool_mutex;
    std::multimap<std::string, std::unique_ptr<Socket>> request_pool;

    explicit Context(CurveKeyPair pair) : handle(zmq_ctx_new()), keys(std::move(pair))
    {
        if (!handle) throw_zmq("zmq_ctx_new");
        // Every CURVE handshake on this context is passed to the ZAP handler,
        // which records the client key as the message's User-Id.
        auto socket = std::make_unique<Socket>(handle, ZMQ_REP);
        if (zmq_bind(socket->get(), "inproc://zeromq.zap.01") != 0) throw_zmq("ZAP bind");
        zap = std::thread([s = std::move(socket)] { serve_zap(*s); });
    }

    ~Context()
    {
        {
            std::lock_guard lock(pool_mutex);
            request_pool.clear();
        }
        zmq_ctx_shutdown(handle);
        if (zap.joinable()) zap.join();
        zmq_ctx_term(handle);
    }

    static void serve_zap(Socket& socket)
    {
        for (;;) {
            Frame first;
            if (!first.receive(socket)) return;  // context shut down
            const auto parts = receive_parts(socket, first);
            if (parts.size() < 6) continue;
            std::string user_id;
            if (parts[5] == "CURVE" && parts.size() >= 7 && parts[6].size() == kBinaryKeyLength) {
                user_id = z85_encode(parts[6]);
            }
            const std::string reply[] = {"1.0", parts[1], "200", "OK", user_id, ""};
            for (std::size_t i = 0; i < std::size(reply); ++i) {
                socket.send(reply[i], i + 1 < std::size(reply) ? ZMQ_SNDMORE : 0);
            }
        }
    }
};

namespace {

class ZmqReplyEndpoint final : public ReplyEndpoint {
public:
    ZmqReplyEndpoint(std::shared_ptr<ZmqTransport::Context> context, EndpointAddress address,
                     RequestHandler handler)
        : context_(std::move(context)), address_(std::move(address)), handler_(std::move(handler)),
          socket_(context_->handle, ZMQ_REP)
    {
        socket_.make_curve_server(context_->keys);
        socket_.bind(address_);
        thread_ = std::thread([this] { run(); });
    }

    ~ZmqReplyEndpoint() override { stop(); }

    const EndpointAddress& address() const override { return address_; }

    void stop() override
    {
        stopping_ = true;
        if (thread_.joinable()) thread_.join();
    }

private:
    void run()
    {
        while (!stopping_) {
            if (!socket_.wait_readable(kServicePollMs)) continue;
            Frame first;
            if (!first.receive(socket_)) continue;
            PeerInfo peer{first.property("User-Id")};
            auto parts = receive_parts(socket_, first);
            Bytes reply;
            try {
                reply = handler_(parts.front(), peer);
            } catch (const std::exception& e) {
                spdlog::error("reply handler on {} threw: {}", address_.str(), e.what());
            }
            socket_.send(reply);
        }
    }

    std::shared_ptr<ZmqTransport::Context> context_;
    EndpointAddress address_;
    RequestHandler handler_;
    Socket socket_;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

class ZmqRouterEndpoint final : public RouterEndpoint {
public:
    ZmqRouterEndpoint(std::shared_ptr<ZmqTransport::Context> context, EndpointAddress address)
        : context_(std::move(context)), address_(std::move(address)),
          socket_(context_->handle, ZMQ_ROUTER), wake_(eventfd(0, EFD_NONBLOCK | EFD_CLOEXEC))
    {
        if (wake_ < 0) throw TransportError("eventfd failed");
        socket_.make_curve_server(context_->keys);
        socket_.set_int(ZMQ_ROUTER_MANDATORY, 1);
        socket_.set_int(ZMQ_SNDHWM, 0);
        try {
            socket_.bind(address_);
        } catch (...) {
            ::close(wake_);
            throw;
        }
        thread_ = std::thread([this] { run(); });
    }

    ~ZmqRouterEndpoint() override
    {
        stop();
        ::close(wake_);
    }

    const EndpointAddress& address() const override { return address_; }

    DeliveryResult push(std::string_view identity, Bytes frame) override
    {
        std::future<DeliveryResult> result;
        {
            std::lock_guard lock(mutex_);
            if (stopping_) return DeliveryResult::UnknownIdentity;
            pending_.push_back({std::string(identity), std::move(frame), {}});
            result = pending_.back().done.get_future();
        }
        signal();
        return result.get();
    }

    void stop() override
    {
        {
            std::lock_guard lock(mutex_);
            if (stopping_) return;
            stopping_ = true;
        }
        signal();
        if (thread_.joinable()) thread_.join();
        std::lock_guard lock(mutex_);
        for (auto& p : pending_) p.done.set_value(DeliveryResult::UnknownIdentity);
        pending_.clear();
    }

private:
    struct Pending {
        std::string identity;
        Bytes frame;
        std::promise<DeliveryResult> done;
    };

    void signal()
    {
        const std::uint64_t one = 1;
        [[maybe_unused]] auto n = ::write(wake_, &one, sizeof one);
    }

    void run()
    {
        for (;;) {
            zmq_pollitem_t items[] = {
                {socket_.get(), 0, ZMQ_POLLIN, 0},
                {nullptr, wake_, ZMQ_POLLIN, 0},
            };
            if (zmq_poll(items, 2, kServicePollMs) < 0 && zmq_errno() != EINTR) {
                spdlog::error("router poll on {} failed: {}", address_.str(), zmq_strerror(zmq_errno()));
                return;
            }
            if (items[0].revents & ZMQ_POLLIN) accept_hello();
            if (items[1].revents & ZMQ_POLLIN) {
                std::uint64_t count;
                [[maybe_unused]] auto n = ::read(wake_, &count, sizeof count);
            }
            std::deque<Pending> batch;
            {
                std::lock_guard lock(mutex_);
                if (stopping_) return;
                batch.swap(pending_);
            }
            for (auto& p : batch) p.done.set_value(deliver(p.identity, p.frame));
        }
    }

    /// Dealers announce themselves with one frame after connecting; the
    /// empty reply tells them the identity is routable.
    void accept_hello()
    {
        Frame first;
        if (!first.receive(socket_, ZMQ_DONTWAIT)) return;
        const auto parts = receive_parts(socket_, first);
        const auto& identity = parts.front();
        seen_.insert(identity);
        if (socket_.send(identity, ZMQ_SNDMORE | ZMQ_DONTWAIT)) socket_.send("", ZMQ_DONTWAIT);
    }

    DeliveryResult deliver(const std::string& identity, const Bytes& frame)
    {
        if (!socket_.send(identity, ZMQ_SNDMORE | ZMQ_DONTWAIT)) {
            return seen_.contains(identity) ? DeliveryResult::Disconnected : DeliveryResult::UnknownIdentity;
        }
        socket_.send(frame, ZMQ_DONTWAIT);
        return DeliveryResult::Delivered;
    }

    std::shared_ptr<ZmqTransport::Context> context_;
    EndpointAddress address_;
    Socket socket_;
    int wake_;
    std::mutex mutex_;
    std::deque<Pending> pending_;
    bool stopping_ = false;
    std::set<std::string> seen_;
    std::thread thread_;
};

class ZmqDealer final : public DealerConnection {
public:
    ZmqDealer(std::shared_ptr<ZmqTransport::Context> context, const EndpointAddress& address,
              std::string identity, Milliseconds timeout)
        : context_(std::move(context)), identity_(std::move(identity)),
          socket_(context_->handle, ZMQ_DEALER)
    {
        if (identity_.empty() || identity_.size() > 255 || identity_.front() == '\0') {
            throw TransportError("dealer identity must be 1-255 bytes and not start with NUL");
        }
        socket_.set_bytes(ZMQ_ROUTING_ID, identity_);
        socket_.set_int(ZMQ_RCVHWM, 0);
        socket_.make_curve_client(context_->keys, address.server_key);
        socket_.connect(address);
        socket_.send("");
        if (!socket_.wait_readable(static_cast<long>(timeout.count()))) {
            throw TimeoutError("router at " + address.str() + " did not acknowledge " + identity_);
        }
        Frame ack;
        ack.receive(socket_);
    }

    const std::string& identity() const override { return identity_; }

    std::optional<Bytes> receive(Milliseconds timeout) override
    {
        if (!socket_.wait_readable(static_cast<long>(timeout.count()))) return std::nullopt;
        Frame frame;
        if (!frame.receive(socket_)) return std::nullopt;
        return receive_parts(socket_, frame).front();
    }

private:
    std::shared_ptr<ZmqTransport::Context> context_;
    std::string identity_;
    Socket socket_;
};

}  // namespace

CurveKeyPair CurveKeyPair::generate()
{
    char pub[kZ85KeyLength + 1];
    char sec[kZ85KeyLength + 1];
    if (zmq_curve_keypair(pub, sec) != 0) throw_zmq("zmq_curve_keypair");
    return {pub, sec};
}

CurveKeyPair CurveKeyPair::load(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read key file " + file.string());
    CurveKeyPair keys;
    std::string word, value;
    while (in >> word >> value) {
        if (word == "public") keys.public_key = value;
        else if (word == "secret") keys.secret_key = value;
    }
    if (keys.public_key.size() != kZ85KeyLength || keys.secret_key.size() != kZ85KeyLength) {
        throw std::runtime_error("key file " + file.string() + " needs 'public' and 'secret' Z85 keys");
    }
    return keys;
}

void CurveKeyPair::save(const std::filesystem::path& file) const
{
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write key file " + file.string());
    out << "public " << public_key << "\nsecret " << secret_key << "\n";
}

std::string normalize_public_key(std::string_view key)
{
    if (key.size() == kZ85KeyLength) {
        std::uint8_t raw[kBinaryKeyLength];
        const std::string copy(key);
        if (!zmq_z85_decode(raw, copy.c_str())) throw std::invalid_argument("invalid Z85 key");
        return copy;
    }
    if (key.size() == 2 * kBinaryKeyLength) {
        std::string lower(key);
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const auto raw = from_hex(lower);
        if (!raw) throw std::invalid_argument("invalid hex key");
        return z85_encode(*raw);
    }
    throw std::invalid_argument("public key must be 40 Z85 characters or 64 hex digits");
}

ZmqTransport::ZmqTransport(CurveKeyPair keys) : context_(std::make_shared<Context>(std::move(keys))) {}

ZmqTransport::~ZmqTransport() = default;

const CurveKeyPair& ZmqTransport::keys() const { return context_->keys; }

std::unique_ptr<ReplyEndpoint> ZmqTransport::serve_reply(const EndpointAddress& address,
                                                         RequestHandler handler)
{
    return std::make_unique<ZmqReplyEndpoint>(context_, address, std::move(handler));
}

std::unique_ptr<RouterEndpoint> ZmqTransport::serve_router(const EndpointAddress& address)
{
    return std::make_unique<ZmqRouterEndpoint>(context_, address);
}

Bytes ZmqTransport::request(const EndpointAddress& address, std::string_view frame, Milliseconds timeout)
{
    const auto key = address.str() + "|" + address.server_key;
    std::unique_ptr<Socket> socket;
    {
        std::lock_guard lock(context_->pool_mutex);
        const auto it = context_->request_pool.find(key);
        if (it != context_->request_pool.end()) {
            socket = std::move(it->second);
            context_->request_pool.erase(it);
        }
    }
    if (!socket) {
        socket = std::make_unique<Socket>(context_->handle, ZMQ_REQ);
        socket->make_curve_client(context_->keys, address.server_key);
        socket->connect(address);
    }
    if (!socket->send(frame)) throw_zmq("send to " + address.str());
    // A REQ socket that timed out is stuck mid-exchange; it is dropped
    // rather than returned to the pool.
    if (!socket->wait_readable(static_cast<long>(timeout.count()))) {
        throw TimeoutError("no reply from " + address.str() + " within " +
                           std::to_string(timeout.count()) + " ms");
    }
    Frame reply;
    if (!reply.receive(*socket)) throw_zmq("receive from " + address.str());
    auto parts = receive_parts(*socket, reply);
    {
        std::lock_guard lock(context_->pool_mutex);
        context_->request_pool.emplace(key, std::move(socket));
    }
    return std::move(parts.front());
}

std::unique_ptr<DealerConnection> ZmqTransport::connect_dealer(const EndpointAddress& address,
                                                               std::string_view identity,
                                                               Milliseconds timeout)
{
    return std::make_unique<ZmqDealer>(context_, address, std::string(identity), timeout);
}

std::string ZmqTransport::public_key() const { return context_->keys.public_key; }

}  // namespace zest
