#pragma once

#include "zest/clock.hpp"
#include "zest/codec.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace zest {

/// One observation event as carried on the router endpoint.
struct MetaRecord {
    Timestamp timestamp{0};
    std::string uri_path;
    ContentFormat format = ContentFormat::Text;
    Bytes data;

    bool operator==(const MetaRecord&) const = default;
};

/// "<timestamp> <uri_path> <format> <data>", single spaces, no newline.
/// Text and JSON data are embedded verbatim, binary data as base64.
std::string format_meta_record(const MetaRecord& record);

/// Inverse of format_meta_record; nullopt on malformed lines.
std::optional<MetaRecord> parse_meta_record(std::string_view line);

}  // namespace zest
