#include "zest/store.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <sstream>

namespace zest {

namespace {

std::vector<std::string_view> split_segments(std::string_view rest)
{
    std::vector<std::string_view> segments;
    std::size_t start = 0;
    while (start <= rest.size()) {
        const auto end = rest.find('/', start);
        const auto stop = end == std::string_view::npos ? rest.size() : end;
        segments.push_back(rest.substr(start, stop - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return segments;
}

void require_kv_key(std::string_view path)
{
    if (!path.starts_with(kKvPrefix)) throw RequestError(Code::BadRequest, "not a /kv/ path");
    for (auto segment : split_segments(path.substr(kKvPrefix.size()))) {
        if (segment.empty() || segment == "*") throw RequestError(Code::BadRequest, "bad key path");
    }
}

Timestamp parse_millis(std::string_view text)
{
    Timestamp::rep value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) {
        throw RequestError(Code::BadRequest, "bad timestamp");
    }
    return Timestamp{value};
}

nlohmann::json point_json(const TsPoint& p)
{
    return {{"timestamp", p.timestamp.count()}, {"data", nlohmann::json::parse(p.value)}};
}

std::string audit_value(const AuditRecord& r)
{
    return r.token_id + " " + r.method + " " + std::to_string(static_cast<int>(r.outcome));
}

}  // namespace

Store::Store(StoreConfig config, Transport& transport, const Clock& clock)
    : node_(std::move(config.node), transport, clock)
{
    if (config.data_dir) {
        journal_ = std::make_unique<Journal>(*config.data_dir / "journal.log");
        replay();
    }

    node_.route(Code::Post, "/kv/*", [this](const Request& r) { return on_kv_post(r); });
    node_.route(Code::Get, "/kv/*", [this](const Request& r) { return on_kv_get(r); });
    node_.route(Code::Delete, "/kv/*", [this](const Request& r) { return on_kv_delete(r); });
    node_.route(Code::Post, "/ts/*", [this](const Request& r) { return on_ts_append(r); });
    node_.route(Code::Get, "/ts/*", [this](const Request& r) { return on_ts_query(r); });
    node_.route(Code::Post, std::string(kNotificationRequestPrefix) + "*",
                [this](const Request& r) { return on_notification(r); });
    node_.route(Code::Post, std::string(kNotificationResponsePrefix) + "*",
                [this](const Request& r) { return on_notification(r); });
    node_.set_catalogue_source([this] { return catalogue(); });
    node_.set_audit_sink([this](const AuditEvent& e) { record_audit(e); });
}

void Store::journal(const JournalRecord& record)
{
    if (journal_) journal_->append(record);
}

void Store::replay()
{
    std::size_t count = 0;
    for (auto& record : journal_->replay()) {
        ++count;
        switch (record.kind) {
        case JournalKind::KvPut:
            kv_[record.path] = KvEntry{std::move(record.value), record.format};
            break;
        case JournalKind::KvDelete:
            kv_.erase(record.path);
            break;
        case JournalKind::TsAppend:
            series_[record.path].push_back(TsPoint{record.timestamp, std::move(record.value)});
            break;
        case JournalKind::Audit: {
            AuditRecord audit{record.timestamp, "-", "-", record.path, Code::BadRequest};
            std::istringstream fields(record.value);
            int outcome = 0;
            fields >> audit.token_id >> audit.method >> outcome;
            if (auto code = code_from_byte(static_cast<std::uint8_t>(outcome))) audit.outcome = *code;
            audit_.push_back(std::move(audit));
            break;
        }
        }
    }
    spdlog::info("store {} replayed {} journal records", node_.config().name, count);
}

Response Store::on_kv_post(const Request& request)
{
    require_kv_key(request.path);
    {
        std::unique_lock lock(data_mutex_);
        journal({JournalKind::KvPut, node_.clock().now(), request.path, request.format, request.payload});
        kv_[request.path] = KvEntry{request.payload, request.format};
    }
    node_.emit_event(MetaRecord{node_.clock().now(), request.path, request.format, request.payload},
                     ObserveMode::Data);
    return Response::ack_post();
}

Response Store::on_kv_get(const Request& request)
{
    require_kv_key(request.path);
    auto entry = kv_get(request.path);
    if (!entry) throw RequestError(Code::NotAcceptable, "no such key");
    return Response::with_payload(entry->format, std::move(entry->value));
}

Response Store::on_kv_delete(const Request& request)
{
    require_kv_key(request.path);
    std::unique_lock lock(data_mutex_);
    const auto it = kv_.find(request.path);
    if (it == kv_.end()) throw RequestError(Code::NotAcceptable, "no such key");
    journal({JournalKind::KvDelete, node_.clock().now(), request.path, request.format, {}});
    kv_.erase(it);
    return Response::ack_delete();
}

Response Store::on_ts_append(const Request& request)
{
    const auto segments = split_segments(std::string_view(request.path).substr(kTsPrefix.size()));
    if (segments.size() != 1 || segments[0].empty() || segments[0] == "*") {
        throw RequestError(Code::BadRequest, "append path must be /ts/<id>");
    }
    if (request.format != ContentFormat::Json) {
        throw RequestError(Code::UnsupportedContentFormat, "time series values must be json");
    }
    if (!nlohmann::json::accept(request.payload)) throw RequestError(Code::BadRequest, "invalid json");

    TsPoint point{node_.clock().now(), request.payload};
    {
        std::unique_lock lock(data_mutex_);
        auto& points = series_[request.path];
        if (!points.empty()) point.timestamp = std::max(point.timestamp, points.back().timestamp);
        journal({JournalKind::TsAppend, point.timestamp, request.path, ContentFormat::Json, point.value});
        points.push_back(point);
    }
    node_.emit_event(MetaRecord{point.timestamp, request.path, ContentFormat::Json, point.value},
                     ObserveMode::Data);
    return Response::with_payload(ContentFormat::Json,
                                  nlohmann::json{{"timestamp", point.timestamp.count()}}.dump());
}

Response Store::on_ts_query(const Request& request)
{
    const auto segments = split_segments(std::string_view(request.path).substr(kTsPrefix.size()));
    if (segments.empty() || segments[0].empty()) throw RequestError(Code::BadRequest, "missing series id");
    const auto series = std::string(kTsPrefix) + std::string(segments[0]);

    if (segments.size() == 1 || (segments.size() == 2 && segments[1] == "latest")) {
        const auto latest = ts_latest(series);
        if (!latest) throw RequestError(Code::NotAcceptable, "no such series");
        return Response::with_payload(ContentFormat::Json, point_json(*latest).dump());
    }
    if (segments.size() == 4 && segments[1] == "range") {
        auto out = nlohmann::json::array();
        for (const auto& p : ts_range(series, parse_millis(segments[2]), parse_millis(segments[3]))) {
            out.push_back(point_json(p));
        }
        return Response::with_payload(ContentFormat::Json, out.dump());
    }
    throw RequestError(Code::BadRequest, "unknown time series query");
}

Response Store::on_notification(const Request& request)
{
    // Broker paths are routes, not storage: the payload only goes to observers.
    const MetaRecord record{node_.clock().now(), request.path, request.format, request.payload};
    node_.emit_event(record, ObserveMode::Data);
    node_.emit_event(record, ObserveMode::Notify);
    return Response::ack_post();
}

void Store::record_audit(const AuditEvent& event)
{
    AuditRecord record{event.timestamp, event.token_id, event.method, event.path, event.outcome};
    std::lock_guard lock(audit_mutex_);
    journal({JournalKind::Audit, record.timestamp, record.path, ContentFormat::Text, audit_value(record)});
    audit_.push_back(std::move(record));
}

std::optional<KvEntry> Store::kv_get(std::string_view path) const
{
    std::shared_lock lock(data_mutex_);
    const auto it = kv_.find(path);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
}

std::optional<TsPoint> Store::ts_latest(std::string_view series) const
{
    std::shared_lock lock(data_mutex_);
    const auto it = series_.find(series);
    if (it == series_.end() || it->second.empty()) return std::nullopt;
    return it->second.back();
}

std::vector<TsPoint> Store::ts_range(std::string_view series, Timestamp from, Timestamp to) const
{
    if (from > to) throw RequestError(Code::BadRequest, "range start after end");
    std::shared_lock lock(data_mutex_);
    const auto it = series_.find(series);
    if (it == series_.end()) throw RequestError(Code::NotAcceptable, "no such series");
    const auto& points = it->second;
    const auto by_time = [](const TsPoint& p, Timestamp t) { return p.timestamp < t; };
    const auto first = std::lower_bound(points.begin(), points.end(), from, by_time);
    const auto last = std::upper_bound(points.begin(), points.end(), to,
                                       [](Timestamp t, const TsPoint& p) { return t < p.timestamp; });
    return {first, last};
}

std::vector<AuditRecord> Store::audit_log() const
{
    std::lock_guard lock(audit_mutex_);
    return audit_;
}

std::vector<std::string> Store::kv_keys() const
{
    std::shared_lock lock(data_mutex_);
    std::vector<std::string> keys;
    keys.reserve(kv_.size());
    for (const auto& [k, _] : kv_) keys.push_back(k);
    return keys;
}

std::vector<CatalogueItem> Store::catalogue() const
{
    std::vector<CatalogueItem> items;
    std::shared_lock lock(data_mutex_);
    for (const auto& [path, entry] : kv_) {
        items.push_back({path,
                         {{std::string(kRelDescription), "key/value"},
                          {std::string(kRelContentType), std::string(content_format_name(entry.format))}}});
    }
    for (const auto& [path, points] : series_) {
        items.push_back({path,
                         {{std::string(kRelDescription), "time series"},
                          {std::string(kRelContentType), "json"}}});
    }
    return items;
}

}  // namespace zest
