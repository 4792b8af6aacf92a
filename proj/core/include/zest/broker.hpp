#pragma once

#include "zest/client.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <thread>

namespace zest {

/// "/notification/request/<service>/<id>"
std::string notification_request_path(std::string_view service, std::string_view id);
/// "/notification/response/<service>/<id>"
std::string notification_response_path(std::string_view service, std::string_view id);
/// Swaps the /request/ segment for /response/; nullopt for other paths.
std::optional<std::string> response_path_for(std::string_view request_path);

struct NotificationPayload {
    ContentFormat format = ContentFormat::Json;
    Bytes data;
};

using NotificationHandler = std::function<NotificationPayload(const NotificationPayload&)>;

/// Tokens a notification server needs at the store: GET on
/// /notification/request/<service>/* and POST on
/// /notification/response/<service>/*.
struct ServerTokens {
    std::string observe;
    std::string respond;
};

/// Tokens a notification client needs: GET on the response paths and POST
/// on the request paths of the service.
struct ClientTokens {
    std::string observe;
    std::string request;
};

/// Serves one notification service through a store. Observes the service's
/// request paths and answers each request by POSTing the handler's result to
/// the matching response path. A throwing handler is answered with
/// {"error": "<what>"}.
class NotificationWorker {
public:
    NotificationWorker(Client& store, std::string service, NotificationHandler handler,
                       std::uint32_t max_age, ServerTokens tokens);
    ~NotificationWorker();
    NotificationWorker(const NotificationWorker&) = delete;
    NotificationWorker& operator=(const NotificationWorker&) = delete;

    void stop();
    std::size_t handled() const { return handled_; }

private:
    void run();

    Client& store_;
    std::string service_;
    NotificationHandler handler_;
    ServerTokens tokens_;
    Observation observation_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> handled_{0};
    std::thread thread_;
};

/// Starts a worker; the observation is registered before this returns.
std::unique_ptr<NotificationWorker> serve_notifications(Client& store, std::string service,
                                                        NotificationHandler handler,
                                                        std::uint32_t max_age, ServerTokens tokens);

/// One request/response exchange: observe the fresh callback path, POST the
/// request, wait for the reply. Throws TimeoutError if nothing answers.
/// `exchange_id`, when given, receives the generated request id.
NotificationPayload notify_request(Client& store, std::string_view service, const NotificationPayload& request,
                                   const ClientTokens& tokens, Milliseconds timeout,
                                   std::string* exchange_id = nullptr);

}  // namespace zest
