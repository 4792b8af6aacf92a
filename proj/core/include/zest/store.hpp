#pragma once

#include "zest/journal.hpp"
#include "zest/node.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace zest {

struct KvEntry {
    Bytes value;
    ContentFormat format = ContentFormat::Text;
};

struct TsPoint {
    Timestamp timestamp{0};
    /// JSON text.
    Bytes value;

    bool operator==(const TsPoint&) const = default;
};

struct AuditRecord {
    Timestamp timestamp{0};
    std::string token_id;
    std::string method;
    std::string path;
    Code outcome = Code::BadRequest;
};

struct StoreConfig {
    NodeConfig node;
    /// Journal directory; nullopt keeps everything in memory.
    std::optional<std::filesystem::path> data_dir;
};

/// Reference server node: key/value entries under /kv/, JSON time series
/// under /ts/, and the notification broker paths, all journalled and all
/// feeding data and audit observers.
///
/// Paths:
///   /kv/<segment>[/<segment>...]          POST, GET, DELETE
///   /ts/<id>                              POST (append), GET (latest)
///   /ts/<id>/latest                       GET
///   /ts/<id>/range/<from>/<to>            GET, inclusive ms bounds
///   /notification/request/<service>/...   POST (event only)
///   /notification/response/<service>/... POST (event only)
class Store {
public:
    Store(StoreConfig config, Transport& transport, const Clock& clock);

    Node& node() { return node_; }
    void start() { node_.start(); }
    void stop() { node_.stop(); }

    std::optional<KvEntry> kv_get(std::string_view path) const;
    std::optional<TsPoint> ts_latest(std::string_view series) const;
    /// Points with from <= t <= to in ascending order. Throws
    /// RequestError(134) for unknown series and RequestError(128) if from > to.
    std::vector<TsPoint> ts_range(std::string_view series, Timestamp from, Timestamp to) const;

    std::vector<AuditRecord> audit_log() const;
    std::vector<std::string> kv_keys() const;

private:
    Response on_kv_post(const Request& request);
    Response on_kv_get(const Request& request);
    Response on_kv_delete(const Request& request);
    Response on_ts_append(const Request& request);
    Response on_ts_query(const Request& request);
    Response on_notification(const Request& request);
    void record_audit(const AuditEvent& event);
    void replay();
    void journal(const JournalRecord& record);
    std::vector<CatalogueItem> catalogue() const;

    Node node_;
    std::unique_ptr<Journal> journal_;

    mutable std::shared_mutex data_mutex_;
    std::map<std::string, KvEntry, std::less<>> kv_;
    std::map<std::string, std::vector<TsPoint>, std::less<>> series_;

    mutable std::mutex audit_mutex_;
    std::vector<AuditRecord> audit_;
};

inline constexpr std::string_view kKvPrefix = "/kv/";
inline constexpr std::string_view kTsPrefix = "/ts/";
inline constexpr std::string_view kNotificationRequestPrefix = "/notification/request/";
inline constexpr std::string_view kNotificationResponsePrefix = "/notification/response/";

}  // namespace zest
