#include "zest/broker.hpp"

#include "zest/encoding.hpp"
#include "zest/store.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace zest {

namespace {

constexpr Milliseconds kWorkerPoll{100};

std::uint32_t max_age_covering(Milliseconds timeout)
{
    const auto seconds = std::chrono::ceil<std::chrono::seconds>(timeout).count();
    return static_cast<std::uint32_t>(std::max<std::int64_t>(1, seconds + 1));
}

}  // namespace

std::string notification_request_path(std::string_view service, std::string_view id)
{
    return std::string(kNotificationRequestPrefix) + std::string(service) + "/" + std::string(id);
}

std::string notification_response_path(std::string_view service, std::string_view id)
{
    return std::string(kNotificationResponsePrefix) + std::string(service) + "/" + std::string(id);
}

std::optional<std::string> response_path_for(std::string_view request_path)
{
    if (!request_path.starts_with(kNotificationRequestPrefix)) return std::nullopt;
    return std::string(kNotificationResponsePrefix) +
           std::string(request_path.substr(kNotificationRequestPrefix.size()));
}

NotificationWorker::NotificationWorker(Client& store, std::string service, NotificationHandler handler,
                                       std::uint32_t max_age, ServerTokens tokens)
    : store_(store), service_(std::move(service)), handler_(std::move(handler)), tokens_(std::move(tokens)),
      observation_(store_.observe(std::string(kNotificationRequestPrefix) + service_ + "/*", ObserveMode::Data,
                                  max_age, tokens_.observe))
{
    thread_ = std::thread([this] { run(); });
}

NotificationWorker::~NotificationWorker() { stop(); }

void NotificationWorker::stop()
{
    stopping_ = true;
    if (thread_.joinable()) thread_.join();
}

void NotificationWorker::run()
{
    while (!stopping_) {
        const auto event = observation_.next(kWorkerPoll);
        if (!event) continue;
        const auto reply_path = response_path_for(event->uri_path);
        if (!reply_path) continue;

        NotificationPayload result;
        try {
            result = handler_(NotificationPayload{event->format, event->data});
        } catch (const std::exception& e) {
            result = {ContentFormat::Json, nlohmann::json{{"error", e.what()}}.dump()};
        }
        try {
            store_.post(*reply_path, result.data, result.format, tokens_.respond);
            ++handled_;
        } catch (const std::exception& e) {
            spdlog::warn("notification reply to {} failed: {}", *reply_path, e.what());
        }
    }
}

std::unique_ptr<NotificationWorker> serve_notifications(Client& store, std::string service,
                                                        NotificationHandler handler,
                                                        std::uint32_t max_age, ServerTokens tokens)
{
    return std::make_unique<NotificationWorker>(store, std::move(service), std::move(handler), max_age,
                                                std::move(tokens));
}

NotificationPayload notify_request(Client& store, std::string_view service, const NotificationPayload& request,
                                   const ClientTokens& tokens, Milliseconds timeout, std::string* exchange_id)
{
    const auto id = make_uuid();
    if (exchange_id) *exchange_id = id;
    // Observe before posting so the reply cannot overtake the registration.
    auto callback = store.observe(notification_response_path(service, id), ObserveMode::Notify,
                                  max_age_covering(timeout), tokens.observe);
    store.post(notification_request_path(service, id), request.data, request.format, tokens.request);
    const auto reply = callback.next(timeout);
    if (!reply) throw TimeoutError("no notification response for " + std::string(service) + "/" + id);
    return {reply->format, reply->data};
}

}  // namespace zest
