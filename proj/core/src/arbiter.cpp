#include "zest/arbiter.hpp"

#include "zest/path.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace zest {

namespace {

bool same_scope(const PermissionGrant& a, const PermissionGrant& b)
{
    return a.grantee == b.grantee && a.target == b.target && a.method == b.method && a.path == b.path;
}

nlohmann::json parse_body(const Request& request)
{
    if (request.format != ContentFormat::Json) {
        throw RequestError(Code::UnsupportedContentFormat, "arbiter bodies are json");
    }
    auto body = nlohmann::json::parse(request.payload, nullptr, false);
    if (!body.is_object()) throw RequestError(Code::BadRequest, "body must be a json object");
    return body;
}

std::string string_field(const nlohmann::json& body, const char* name)
{
    const auto it = body.find(name);
    if (it == body.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
        throw RequestError(Code::BadRequest, std::string("missing field ") + name);
    }
    return it->get<std::string>();
}

Code method_field(const nlohmann::json& body)
{
    const auto method = method_from_name(string_field(body, "method"));
    if (!method) throw RequestError(Code::BadRequest, "method must be GET, POST or DELETE");
    return *method;
}

std::string path_field(const nlohmann::json& body)
{
    auto path = string_field(body, "path");
    if (path != "*" && !is_valid_path(path)) throw RequestError(Code::BadRequest, "bad path");
    return path;
}

bool observe_field(const nlohmann::json& body)
{
    const auto it = body.find("observe");
    if (it == body.end()) return false;
    if (!it->is_boolean()) throw RequestError(Code::BadRequest, "observe must be a boolean");
    return it->get<bool>();
}

}  // namespace

Arbiter::Arbiter(ArbiterConfig config, Transport& transport, const Clock& clock)
    : node_(std::move(config.node), transport, clock), target_secrets_(std::move(config.target_secrets)),
      credentials_(std::move(config.credentials))
{
    const auto& self = node_.config();
    for (Code method : {Code::Get, Code::Post, Code::Delete}) {
        manager_tokens_.emplace(method, mint_scoped(self.root_secret, kManagerIdentifier, self.name, self.name,
                                                    method, "*"));
    }

    node_.route(Code::Post, "/grant", [this](const Request& r) { return on_grant(r); });
    node_.route(Code::Delete, "/grant/*", [this](const Request& r) { return on_revoke(r); });
    node_.route(Code::Post, "/token", [this](const Request& r) { return on_token(r); }, RouteAccess::Credential);
    node_.set_catalogue_source([this] { return catalogue(); });
}

void Arbiter::register_target(std::string name, std::string secret)
{
    std::unique_lock lock(mutex_);
    target_secrets_[std::move(name)] = std::move(secret);
}

void Arbiter::register_credential(std::string credential, std::string name)
{
    std::unique_lock lock(mutex_);
    credentials_[std::move(credential)] = std::move(name);
}

void Arbiter::upsert_grant(PermissionGrant grant)
{
    std::unique_lock lock(mutex_);
    const auto it = std::find_if(grants_.begin(), grants_.end(),
                                 [&](const auto& g) { return same_scope(g, grant); });
    if (it != grants_.end()) {
        *it = std::move(grant);
    } else {
        grants_.push_back(std::move(grant));
    }
}

bool Arbiter::remove_grant(const PermissionGrant& grant)
{
    std::unique_lock lock(mutex_);
    return std::erase_if(grants_, [&](const auto& g) { return same_scope(g, grant); }) > 0;
}

std::vector<PermissionGrant> Arbiter::grants() const
{
    std::shared_lock lock(mutex_);
    return grants_;
}

Macaroon Arbiter::mint_token(std::string_view requester, std::string_view target, Code method,
                             std::string_view path, bool observe) const
{
    std::shared_lock lock(mutex_);
    const auto secret = target_secrets_.find(std::string(target));
    if (secret == target_secrets_.end()) throw RequestError(Code::NotAcceptable, "unknown target");
    const bool covered = std::any_of(grants_.begin(), grants_.end(), [&](const PermissionGrant& g) {
        return g.grantee == requester && g.target == target && g.method == method &&
               pattern_covers(g.path, path) && (!observe || g.may_observe);
    });
    if (!covered) throw RequestError(Code::Unauthorized, "no grant covers the request");
    return mint_scoped(secret->second, requester, node_.config().name, target, method, path);
}

Response Arbiter::on_grant(const Request& request)
{
    const auto body = parse_body(request);
    upsert_grant({string_field(body, "grantee"), string_field(body, "target"), method_field(body),
                  path_field(body), observe_field(body)});
    return Response::ack_post();
}

Response Arbiter::on_revoke(const Request& request)
{
    // /grant/<grantee>/<target>/<METHOD><path>
    std::string_view rest = request.path;
    rest.remove_prefix(std::string_view("/grant/").size());
    std::string_view fields[3];
    for (auto& field : fields) {
        const auto slash = rest.find('/');
        if (slash == std::string_view::npos || slash == 0) throw RequestError(Code::BadRequest, "bad grant path");
        field = rest.substr(0, slash);
        rest.remove_prefix(slash);
        if (&field != &fields[2]) rest.remove_prefix(1);
    }
    const auto method = method_from_name(fields[2]);
    if (!method) throw RequestError(Code::BadRequest, "bad method in grant path");
    if (!remove_grant({std::string(fields[0]), std::string(fields[1]), *method, std::string(rest), false})) {
        throw RequestError(Code::NotAcceptable, "no such grant");
    }
    return Response::ack_delete();
}

Response Arbiter::on_token(const Request& request)
{
    std::string requester;
    {
        std::shared_lock lock(mutex_);
        const auto it = credentials_.find(request.peer.credential);
        if (it == credentials_.end()) throw RequestError(Code::Unauthorized, "unknown credential");
        requester = it->second;
    }
    const auto body = parse_body(request);
    const auto token = mint_token(requester, string_field(body, "target"), method_field(body), path_field(body),
                                  observe_field(body));
    return Response::with_payload(ContentFormat::Text, serialize(token));
}

std::vector<CatalogueItem> Arbiter::catalogue() const
{
    std::vector<CatalogueItem> items;
    for (const auto& g : grants()) {
        items.push_back({"/grant/" + g.grantee + "/" + g.target + "/" + std::string(method_name(g.method)) + g.path,
                         {{std::string(kRelGrantee), g.grantee},
                          {std::string(kRelTarget), g.target},
                          {std::string(kRelMethod), std::string(method_name(g.method))},
                          {std::string(kRelPath), g.path},
                          {std::string(kRelObserve), g.may_observe ? "true" : "false"}}});
    }
    return items;
}

}  // namespace zest
