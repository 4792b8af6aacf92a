#pragma once

#include "zest/node.hpp"
#include "zest/tokens.hpp"

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace zest {

/// Permission for `grantee` to obtain tokens for `method` on paths covered
/// by `path` at node `target`.
struct PermissionGrant {
    std::string grantee;
    std::string target;
    Code method = Code::Get;
    std::string path;
    bool may_observe = false;

    bool operator==(const PermissionGrant&) const = default;
};

struct ArbiterConfig {
    NodeConfig node;
    /// Root secret of every node the arbiter mints tokens for.
    std::map<std::string, std::string> target_secrets;
    /// Transport credential (public key) -> requester name.
    std::map<std::string, std::string> credentials;
};

/// Identifier carried by the bootstrap manager tokens.
inline constexpr std::string_view kManagerIdentifier = "manager";

/// Token-minting node. Endpoints:
///   POST   /grant                                   manager token; JSON grant
///   DELETE /grant/<grantee>/<target>/<METHOD><path> manager token
///   POST   /token                                   transport credential; JSON
///                                                   {"target","method","path"[,"observe"]}
///   GET    /cat                                     grants as HyperCat items
class Arbiter {
public:
    Arbiter(ArbiterConfig config, Transport& transport, const Clock& clock);

    Node& node() { return node_; }
    void start() { node_.start(); }
    void stop() { node_.stop(); }

    /// Manager tokens minted from the arbiter's own secret, one per method,
    /// each scoped to this arbiter and every path.
    const std::map<Code, Macaroon>& manager_tokens() const { return manager_tokens_; }

    void register_target(std::string name, std::string secret);
    void register_credential(std::string credential, std::string name);

    /// Idempotent: a grant with the same (grantee, target, method, path)
    /// is replaced.
    void upsert_grant(PermissionGrant grant);
    bool remove_grant(const PermissionGrant& grant);
    std::vector<PermissionGrant> grants() const;

    /// Mints a token for `requester` if a grant covers the request. Throws
    /// RequestError(134) for unknown targets, RequestError(129) otherwise.
    Macaroon mint_token(std::string_view requester, std::string_view target, Code method,
                        std::string_view path, bool observe = false) const;

private:
    Response on_grant(const Request& request);
    Response on_revoke(const Request& request);
    Response on_token(const Request& request);
    std::vector<CatalogueItem> catalogue() const;

    Node node_;
    std::map<Code, Macaroon> manager_tokens_;

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::string> target_secrets_;
    std::map<std::string, std::string> credentials_;
    std::vector<PermissionGrant> grants_;
};

/// HyperCat rels used for grant items.
inline constexpr std::string_view kRelGrantee = "urn:X-zest:rels:grantee";
inline constexpr std::string_view kRelTarget = "urn:X-zest:rels:target";
inline constexpr std::string_view kRelMethod = "urn:X-zest:rels:method";
inline constexpr std::string_view kRelPath = "urn:X-zest:rels:path";
inline constexpr std::string_view kRelObserve = "urn:X-zest:rels:observe";

}  // namespace zest
