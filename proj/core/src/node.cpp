#include "zest/node.hpp"

#include "zest/encoding.hpp"
#include "zest/path.hpp"
#include "zest/tokens.hpp"

#include <spdlog/spdlog.h>

namespace zest {

namespace {

constexpr std::string_view kAuditPrefix = "/audit";

Bytes encode_response(Code method, const Response& response)
{
    Message out;
    out.code = response.code;
    if (response.format) out.add_uint(OptionCode::ContentFormat, static_cast<std::uint32_t>(*response.format));
    if (!response.public_key.empty()) out.add(OptionCode::PublicKey, response.public_key);
    out.payload = response.payload;
    if (response.code == Code::AckPost || response.code == Code::AckDelete ||
        response.code == Code::AckPayload) {
        const auto violations = validate_options(out, response_kind(method));
        if (!violations.empty()) {
            spdlog::error("handler produced an invalid {} response: {}",
                          message_kind_name(response_kind(method)), violations.front().describe());
            return encode_message(Message{Code::InternalServerError, {}, {}, {}});
        }
        if (response.code == Code::AckDelete && !out.payload.empty()) {
            return encode_message(Message{Code::InternalServerError, {}, {}, {}});
        }
    }
    return encode_message(out);
}

/// Observers of "/audit/<rest>" in audit mode watch requests on "/<rest>".
std::string observe_pattern(const std::string& path, ObserveMode mode)
{
    if (mode == ObserveMode::Audit && path.starts_with(kAuditPrefix) &&
        path.size() > kAuditPrefix.size() && path[kAuditPrefix.size()] == '/') {
        return path.substr(kAuditPrefix.size());
    }
    return path;
}

}  // namespace

MessageKind request_kind(Code method)
{
    switch (method) {
    case Code::Get: return MessageKind::GetRequest;
    case Code::Post: return MessageKind::PostRequest;
    case Code::Delete: return MessageKind::DeleteRequest;
    default: throw std::invalid_argument("not a request code");
    }
}

MessageKind response_kind(Code method)
{
    switch (method) {
    case Code::Get: return MessageKind::GetResponse;
    case Code::Post: return MessageKind::PostResponse;
    case Code::Delete: return MessageKind::DeleteResponse;
    default: throw std::invalid_argument("not a request code");
    }
}

Node::Node(NodeConfig config, Transport& transport, const Clock& clock)
    : config_(std::move(config)), transport_(transport), clock_(clock)
{
    route(Code::Get, std::string(kCataloguePath), [this](const Request&) {
        return Response::with_payload(
            ContentFormat::Json,
            render_catalogue(config_.name, catalogue_source_ ? catalogue_source_() : std::vector<CatalogueItem>{}));
    });
}

Node::~Node() { stop(); }

void Node::route(Code method, std::string pattern, RouteHandler handler, RouteAccess access)
{
    routes_.push_back({method, std::move(pattern), std::move(handler), access});
}

void Node::set_catalogue_source(std::function<std::vector<CatalogueItem>()> source)
{
    catalogue_source_ = std::move(source);
}

void Node::set_audit_sink(std::function<void(const AuditEvent&)> sink)
{
    audit_sink_ = std::move(sink);
}

void Node::start()
{
    router_ = transport_.serve_router(config_.router_address);
    reply_ = transport_.serve_reply(config_.reply_address, [this](std::string_view frame, const PeerInfo& peer) {
        return handle_request(frame, peer);
    });
    if (config_.expiry_interval.count() > 0) {
        expiry_stop_ = false;
        expiry_thread_ = std::thread([this] { run_expiry(); });
    }
    spdlog::info("node {} serving requests on {}, observations on {}", config_.name,
                 config_.reply_address.str(), config_.router_address.str());
}

void Node::stop()
{
    {
        std::lock_guard lock(expiry_mutex_);
        expiry_stop_ = true;
    }
    expiry_wake_.notify_all();
    if (expiry_thread_.joinable()) expiry_thread_.join();
    if (reply_) reply_->stop();
    if (router_) router_->stop();
    reply_.reset();
    router_.reset();
}

void Node::drain() { draining_ = true; }

void Node::run_expiry()
{
    std::unique_lock lock(expiry_mutex_);
    while (!expiry_wake_.wait_for(lock, config_.expiry_interval, [this] { return expiry_stop_; })) {
        lock.unlock();
        expire_observations();
        lock.lock();
    }
}

Bytes Node::handle_request(std::string_view raw, const PeerInfo& peer)
{
    ++requests_;
    AuditEvent audit{clock_.now(), "-", "-", "-", Code::BadRequest};
    Message request;
    Code method = Code::Get;
    Bytes response;
    try {
        request = decode_message(raw);
        if (!is_request(request.code)) throw MalformedMessage("response code on request endpoint");
        method = request.code;
        audit.method = method_name(method);
        const auto result = process(request, peer, audit);
        audit.outcome = result.code;
        response = encode_response(method, result);
    } catch (const MalformedMessage& e) {
        spdlog::debug("{}: malformed request: {}", config_.name, e.what());
        audit.outcome = Code::BadRequest;
        response = encode_message(Message{Code::BadRequest, {}, {}, {}});
    }
    record_audit(audit);
    return response;
}

Response Node::process(const Message& request, const PeerInfo& peer, AuditEvent& audit)
{
    const auto method = request.code;
    if (const auto* path = request.find(OptionCode::UriPath)) audit.path = *path;

    if (!validate_options(request, request_kind(method)).empty()) return Response::error(Code::BadRequest);

    const auto path = *request.find(OptionCode::UriPath);
    if (!is_valid_path(path)) return Response::error(Code::BadRequest);
    const auto format = content_format_from_value(decode_uint_option(*request.find(OptionCode::ContentFormat)));
    if (!format) return Response::error(Code::UnsupportedContentFormat);
    if (request.payload.size() > config_.max_payload) return Response::error(Code::RequestEntityTooLarge);
    if (draining_) return Response::error(Code::ServiceUnavailable);

    const Bytes* observe_value = request.find(OptionCode::Observe);
    std::optional<ObserveMode> mode;
    if (observe_value) {
        mode = observe_mode_from_name(*observe_value);
        if (!mode) return Response::error(Code::BadRequest);
    }

    const Route* route = observe_value ? nullptr : find_route(method, path);
    if (!route || route->access == RouteAccess::Token) {
        try {
            const auto token = deserialize(request.token);
            audit.token_id = token.identifier;
            const auto verdict = verify(token, config_.root_secret, {method, path, config_.name});
            if (!verdict) {
                spdlog::debug("{}: token {} rejected: {}", config_.name, token.identifier, verdict.reason);
                return Response::error(Code::Unauthorized);
            }
            if (!has_required_caveats(token)) return Response::error(Code::Unauthorized);
        } catch (const TokenParseError&) {
            return Response::error(Code::Unauthorized);
        }
    }
    ++authorized_;

    if (mode) return observe(request, path, *mode);
    if (!route) return Response::error(Code::NotAcceptable);

    const auto* host = request.find(OptionCode::UriHost);
    const Request ctx{method, path, host ? *host : std::string(), *format, request.payload,
                      audit.token_id, peer};
    ++handler_calls_;
    try {
        return route->handler(ctx);
    } catch (const RequestError& e) {
        spdlog::debug("{}: {} {} -> {}: {}", config_.name, method_name(method), path,
                      static_cast<int>(e.code()), e.what());
        return Response::error(e.code());
    } catch (const std::exception& e) {
        spdlog::error("{}: handler for {} {} failed: {}", config_.name, method_name(method), path, e.what());
        return Response::error(Code::InternalServerError);
    }
}

Response Node::observe(const Message& request, const std::string& path, ObserveMode mode)
{
    if (request.code != Code::Get) return Response::error(Code::BadRequest);
    std::uint32_t max_age = kDefaultMaxAgeSeconds;
    if (const auto* value = request.find(OptionCode::MaxAge)) max_age = decode_uint_option(*value);

    ObservationEntry entry;
    entry.mode = mode;
    entry.pattern = observe_pattern(path, mode);
    // Notification clients pick their own identity: the callback path.
    entry.identity = mode == ObserveMode::Notify ? path : make_uuid();
    const auto now = clock_.now();
    entry.expires_at = expiry_for(now, max_age);
    entry.format_hint = content_format_from_value(decode_uint_option(*request.find(OptionCode::ContentFormat)))
                            .value_or(ContentFormat::Text);

    Response response = Response::with_payload(ContentFormat::Text,
                                               mode == ObserveMode::Notify ? Bytes() : entry.identity);
    response.public_key = transport_.public_key();
    if (!observations_.add(std::move(entry), now)) return Response::error(Code::NotAcceptable);
    return response;
}

const Node::Route* Node::find_route(Code method, std::string_view path) const
{
    for (const auto& r : routes_) {
        if (r.method == method && path_matches(r.pattern, path)) return &r;
    }
    return nullptr;
}

void Node::record_audit(const AuditEvent& event)
{
    if (audit_sink_) {
        try {
            audit_sink_(event);
        } catch (const std::exception& e) {
            spdlog::error("{}: audit sink failed: {}", config_.name, e.what());
        }
    }
    emit_event(MetaRecord{event.timestamp, event.path, ContentFormat::Text, event.token_id + " " + event.method},
               ObserveMode::Audit);
}

std::size_t Node::emit_event(const MetaRecord& record, ObserveMode kind)
{
    if (!router_) return 0;
    const auto targets = observations_.matching(record.uri_path, kind, clock_.now());
    if (targets.empty()) return 0;

    Message ack;
    ack.code = Code::AckPayload;
    ack.add_uint(OptionCode::ContentFormat, static_cast<std::uint32_t>(ContentFormat::Text));
    ack.payload = format_meta_record(record);
    const auto frame = encode_message(ack);

    std::size_t delivered = 0;
    for (const auto& identity : targets) {
        switch (router_->push(identity, frame)) {
        case DeliveryResult::Delivered:
            ++delivered;
            break;
        case DeliveryResult::Disconnected:
            spdlog::info("{}: observer {} went away, dropping it", config_.name, identity);
            observations_.remove(identity);
            break;
        case DeliveryResult::UnknownIdentity:
            // Registered but not connected to the router yet.
            spdlog::debug("{}: observer {} not connected", config_.name, identity);
            break;
        }
    }
    return delivered;
}

std::size_t Node::expire_observations(Timestamp now)
{
    return observations_.expire(now);
}

NodeStats Node::stats() const
{
    return {requests_.load(), authorized_.load(), handler_calls_.load()};
}

}  // namespace zest
