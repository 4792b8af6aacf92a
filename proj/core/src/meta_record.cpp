#include "zest/meta_record.hpp"

#include "zest/encoding.hpp"

#include <charconv>

namespace zest {

std::string format_meta_record(const MetaRecord& record)
{
    std::string line = std::to_string(record.timestamp.count());
    line += ' ';
    line += record.uri_path;
    line += ' ';
    line += content_format_name(record.format);
    line += ' ';
    line += record.format == ContentFormat::Binary ? to_base64(record.data) : record.data;
    return line;
}

std::optional<MetaRecord> parse_meta_record(std::string_view line)
{
    const auto first = line.find(' ');
    if (first == std::string_view::npos) return std::nullopt;
    const auto second = line.find(' ', first + 1);
    if (second == std::string_view::npos) return std::nullopt;
    const auto third = line.find(' ', second + 1);
    if (third == std::string_view::npos) return std::nullopt;

    MetaRecord record;
    Timestamp::rep ts = 0;
    const auto digits = line.substr(0, first);
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ts);
    if (ec != std::errc{} || end != digits.data() + digits.size()) return std::nullopt;
    record.timestamp = Timestamp{ts};
    record.uri_path = line.substr(first + 1, second - first - 1);

    const auto format = content_format_from_name(line.substr(second + 1, third - second - 1));
    if (!format) return std::nullopt;
    record.format = *format;

    const auto data = line.substr(third + 1);
    if (record.format == ContentFormat::Binary) {
        auto raw = from_base64(data);
        if (!raw) return std::nullopt;
        record.data = std::move(*raw);
    } else {
        record.data = data;
    }
    return record;
}

}  // namespace zest
