#pragma once

#include "zest/codec.hpp"
#include "zest/meta_record.hpp"
#include "zest/transport.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace zest {

inline constexpr Milliseconds kDefaultRequestTimeout{5000};

/// A response whose code is not a success acknowledgement.
class RequestRejected : public std::runtime_error {
public:
    explicit RequestRejected(Code code);
    Code code() const { return code_; }

private:
    Code code_;
};

/// Live observation: the router connection plus the identity it was
/// registered under.
class Observation {
public:
    Observation(std::string identity, std::unique_ptr<DealerConnection> connection);

    const std::string& identity() const { return identity_; }

    /// Next meta-protocol line, exactly as the node rendered it.
    std::optional<std::string> next_line(Milliseconds timeout);
    /// Next event, parsed.
    std::optional<MetaRecord> next(Milliseconds timeout);

private:
    std::string identity_;
    std::unique_ptr<DealerConnection> connection_;
};

/// Request/observe client bound to one node's two endpoints.
class Client {
public:
    /// `host` is sent as uri_host on every request.
    Client(Transport& transport, EndpointAddress reply, EndpointAddress router, std::string host,
           Milliseconds timeout = kDefaultRequestTimeout);

    const std::string& host() const { return host_; }

    /// Sends a request built per the option matrix and returns the decoded
    /// response whatever its code.
    Message send(Code method, std::string_view path, std::string_view token, ContentFormat format,
                 std::string_view payload = {});

    /// Like send(), but throws RequestRejected unless the code is 65/66/69.
    Message post(std::string_view path, std::string_view payload, ContentFormat format, std::string_view token);
    Message get(std::string_view path, std::string_view token, ContentFormat format = ContentFormat::Json);
    Message del(std::string_view path, std::string_view token, ContentFormat format = ContentFormat::Json);

    /// GET with the observe option, then connects to the router endpoint
    /// with the identity the node handed out (data/audit) or the callback
    /// path (notify), encrypting with the key from the public_key option.
    Observation observe(std::string_view path, ObserveMode mode, std::uint32_t max_age,
                        std::string_view token, ContentFormat format = ContentFormat::Json);

private:
    Message expect_success(Message response);

    Transport& transport_;
    EndpointAddress reply_;
    EndpointAddress router_;
    std::string host_;
    Milliseconds timeout_;
};

bool is_success(Code code);

}  // namespace zest
