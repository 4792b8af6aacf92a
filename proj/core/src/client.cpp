#include "zest/client.hpp"

namespace zest {

RequestRejected::RequestRejected(Code code)
    : std::runtime_error(std::to_string(static_cast<int>(code)) + " " + std::string(code_meaning(code))),
      code_(code)
{
}

bool is_success(Code code)
{
    return code == Code::AckPost || code == Code::AckDelete || code == Code::AckPayload;
}

Observation::Observation(std::string identity, std::unique_ptr<DealerConnection> connection)
    : identity_(std::move(identity)), connection_(std::move(connection))
{
}

std::optional<std::string> Observation::next_line(Milliseconds timeout)
{
    auto frame = connection_->receive(timeout);
    if (!frame) return std::nullopt;
    auto message = decode_message(*frame);
    return std::move(message.payload);
}

std::optional<MetaRecord> Observation::next(Milliseconds timeout)
{
    const auto line = next_line(timeout);
    if (!line) return std::nullopt;
    return parse_meta_record(*line);
}

Client::Client(Transport& transport, EndpointAddress reply, EndpointAddress router, std::string host,
               Milliseconds timeout)
    : transport_(transport), reply_(std::move(reply)), router_(std::move(router)), host_(std::move(host)),
      timeout_(timeout)
{
}

Message Client::send(Code method, std::string_view path, std::string_view token, ContentFormat format,
                     std::string_view payload)
{
    Message request;
    request.code = method;
    request.token = token;
    request.add(OptionCode::UriPath, path);
    request.add(OptionCode::UriHost, host_);
    request.add_uint(OptionCode::ContentFormat, static_cast<std::uint32_t>(format));
    request.payload = payload;
    return decode_message(transport_.request(reply_, encode_message(request), timeout_));
}

Message Client::expect_success(Message response)
{
    if (!is_success(response.code)) throw RequestRejected(response.code);
    return response;
}

Message Client::post(std::string_view path, std::string_view payload, ContentFormat format, std::string_view token)
{
    return expect_success(send(Code::Post, path, token, format, payload));
}

Message Client::get(std::string_view path, std::string_view token, ContentFormat format)
{
    return expect_success(send(Code::Get, path, token, format));
}

Message Client::del(std::string_view path, std::string_view token, ContentFormat format)
{
    return expect_success(send(Code::Delete, path, token, format));
}

Observation Client::observe(std::string_view path, ObserveMode mode, std::uint32_t max_age,
                            std::string_view token, ContentFormat format)
{
    Message request;
    request.code = Code::Get;
    request.token = token;
    request.add(OptionCode::UriPath, path);
    request.add(OptionCode::UriHost, host_);
    request.add_uint(OptionCode::ContentFormat, static_cast<std::uint32_t>(format));
    request.add(OptionCode::Observe, observe_mode_name(mode));
    request.add_uint(OptionCode::MaxAge, max_age);
    auto response = expect_success(decode_message(transport_.request(reply_, encode_message(request), timeout_)));

    const auto* key = response.find(OptionCode::PublicKey);
    auto router = router_;
    if (key && router.scheme == EndpointAddress::Scheme::Network) router.server_key = *key;
    std::string identity = mode == ObserveMode::Notify ? std::string(path) : response.payload;
    auto connection = transport_.connect_dealer(router, identity, timeout_);
    return Observation(std::move(identity), std::move(connection));
}

}  // namespace zest
