#include "zest/observation.hpp"

#include "zest/path.hpp"

#include <algorithm>

namespace zest {

std::optional<Timestamp> expiry_for(Timestamp now, std::uint32_t max_age_seconds)
{
    if (max_age_seconds == 0) return std::nullopt;
    return now + std::chrono::seconds(max_age_seconds);
}

bool ObservationRegistry::add(ObservationEntry entry, Timestamp now)
{
    std::lock_guard lock(mutex_);
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [&](const auto& e) { return e.identity == entry.identity; });
    if (it == entries_.end()) {
        entries_.push_back(std::move(entry));
        return true;
    }
    if (!it->expired(now)) return false;
    *it = std::move(entry);
    return true;
}

bool ObservationRegistry::remove(std::string_view identity)
{
    std::lock_guard lock(mutex_);
    return std::erase_if(entries_, [&](const auto& e) { return e.identity == identity; }) > 0;
}

bool ObservationRegistry::contains(std::string_view identity) const
{
    std::lock_guard lock(mutex_);
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.identity == identity; });
}

std::size_t ObservationRegistry::size() const
{
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::vector<ObservationEntry> ObservationRegistry::snapshot() const
{
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t ObservationRegistry::expire(Timestamp now)
{
    std::lock_guard lock(mutex_);
    return std::erase_if(entries_, [&](const auto& e) { return e.expired(now); });
}

std::vector<std::string> ObservationRegistry::matching(std::string_view path, ObserveMode mode,
                                                       Timestamp now) const
{
    std::vector<std::string> identities;
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_) {
        if (e.mode == mode && !e.expired(now) && path_matches(e.pattern, path)) {
            identities.push_back(e.identity);
        }
    }
    return identities;
}

}  // namespace zest
