#pragma once

#include "zest/clock.hpp"
#include "zest/codec.hpp"

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zest {

/// Observation lifetime used when a request carries no max_age option.
inline constexpr std::uint32_t kDefaultMaxAgeSeconds = 60;

struct ObservationEntry {
    /// Router identity the events are pushed to.
    std::string identity;
    /// Path or wildcard pattern (see path_matches).
    std::string pattern;
    ObserveMode mode = ObserveMode::Data;
    /// nullopt means the entry never expires.
    std::optional<Timestamp> expires_at;
    ContentFormat format_hint = ContentFormat::Text;

    bool expired(Timestamp now) const { return expires_at && *expires_at <= now; }
};

/// Expiry for an entry registered at `now` with the given max_age
/// (0 = never).
std::optional<Timestamp> expiry_for(Timestamp now, std::uint32_t max_age_seconds);

/// Live subscriptions of one node. All operations are atomic.
class ObservationRegistry {
public:
    /// Adds `entry` unless a live entry already holds its identity. An
    /// expired holder is replaced.
    bool add(ObservationEntry entry, Timestamp now);
    bool remove(std::string_view identity);
    bool contains(std::string_view identity) const;
    std::size_t size() const;
    std::vector<ObservationEntry> snapshot() const;

    /// Removes every entry with expires_at <= now.
    std::size_t expire(Timestamp now);

    /// Identities of unexpired entries of `mode` whose pattern matches `path`.
    std::vector<std::string> matching(std::string_view path, ObserveMode mode, Timestamp now) const;

private:
    mutable std::mutex mutex_;
    std::vector<ObservationEntry> entries_;
};

}  // namespace zest
