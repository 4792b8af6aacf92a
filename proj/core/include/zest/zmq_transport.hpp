#pragma once

#include "zest/transport.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace zest {

/// Long-term CURVE key pair, both halves Z85 text (40 characters).
struct CurveKeyPair {
    std::string public_key;
    std::string secret_key;

    static CurveKeyPair generate();
    /// File format: "public <z85>" and "secret <z85>" lines.
    static CurveKeyPair load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;
};

/// Accepts a CURVE public key as 40 Z85 characters or 64 hex digits and
/// returns the Z85 form. Throws std::invalid_argument otherwise.
std::string normalize_public_key(std::string_view key);

/// ZMTP transport: REQ/REP for the reply endpoint and ROUTER/DEALER for the
/// push endpoint, every socket encrypted with CurveZMQ. Server sockets use
/// this transport's key pair; client sockets authenticate with it too, which
/// is what servers see as PeerInfo::credential.
class ZmqTransport final : public Transport {
public:
    explicit ZmqTransport(CurveKeyPair keys = CurveKeyPair::generate());
    ~ZmqTransport() override;

    const CurveKeyPair& keys() const;

    std::unique_ptr<ReplyEndpoint> serve_reply(const EndpointAddress& address,
                                               RequestHandler handler) override;
    std::unique_ptr<RouterEndpoint> serve_router(const EndpointAddress& address) override;
    Bytes request(const EndpointAddress& address, std::string_view frame,
                  Milliseconds timeout) override;
    std::unique_ptr<DealerConnection> connect_dealer(const EndpointAddress& address,
                                                     std::string_view identity,
                                                     Milliseconds timeout) override;
    std::string public_key() const override;

    struct Context;

private:
    std::shared_ptr<Context> context_;
};

}  // namespace zest
