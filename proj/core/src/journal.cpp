#include "zest/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace zest {

namespace {

template <typename T>
void put(Bytes& out, T value)
{
    for (int shift = (sizeof(T) - 1) * 8; shift >= 0; shift -= 8) {
        out.push_back(static_cast<char>((value >> shift) & 0xff));
    }
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <typename T>
    std::optional<T> take()
    {
        if (data_.size() - pos_ < sizeof(T)) return std::nullopt;
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value = static_cast<T>((value << 8) | static_cast<std::uint8_t>(data_[pos_ + i]));
        }
        pos_ += sizeof(T);
        return value;
    }

    std::optional<std::string_view> bytes(std::size_t n)
    {
        if (data_.size() - pos_ < n) return std::nullopt;
        const auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

[[noreturn]] void throw_errno(const std::string& what)
{
    throw std::runtime_error(what + ": " + std::strerror(errno));
}

}  // namespace

Journal::Journal(std::filesystem::path file) : file_(std::move(file))
{
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    fd_ = ::open(file_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw_errno("cannot open journal " + file_.string());
}

Journal::~Journal()
{
    if (fd_ >= 0) ::close(fd_);
}

Bytes Journal::encode(const JournalRecord& record)
{
    if (record.path.size() > 0xffff) throw std::invalid_argument("journal path too long");
    if (record.value.size() > 0xffffffffu) throw std::invalid_argument("journal value too long");
    Bytes body;
    put(body, static_cast<std::uint8_t>(record.kind));
    put(body, static_cast<std::uint64_t>(record.timestamp.count()));
    put(body, static_cast<std::uint16_t>(record.path.size()));
    body += record.path;
    put(body, static_cast<std::uint32_t>(record.format));
    put(body, static_cast<std::uint32_t>(record.value.size()));
    body += record.value;

    Bytes out;
    out.reserve(4 + body.size());
    put(out, static_cast<std::uint32_t>(body.size()));
    return out + body;
}

std::optional<JournalRecord> Journal::decode(std::string_view body)
{
    Reader in(body);
    JournalRecord record;
    const auto kind = in.take<std::uint8_t>();
    if (!kind) return std::nullopt;
    switch (*kind) {
    case 'K': case 'D': case 'T': case 'A':
        record.kind = static_cast<JournalKind>(*kind);
        break;
    default:
        return std::nullopt;
    }
    const auto ts = in.take<std::uint64_t>();
    const auto path_length = in.take<std::uint16_t>();
    if (!ts || !path_length) return std::nullopt;
    const auto path = in.bytes(*path_length);
    const auto format_value = in.take<std::uint32_t>();
    const auto value_length = in.take<std::uint32_t>();
    if (!path || !format_value || !value_length) return std::nullopt;
    const auto format = content_format_from_value(*format_value);
    const auto value = in.bytes(*value_length);
    if (!format || !value || in.remaining() != 0) return std::nullopt;
    record.timestamp = Timestamp{static_cast<Timestamp::rep>(*ts)};
    record.path = *path;
    record.format = *format;
    record.value = *value;
    return record;
}

std::vector<JournalRecord> Journal::replay()
{
    std::lock_guard lock(mutex_);
    std::ifstream in(file_, std::ios::binary);
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

    std::vector<JournalRecord> records;
    Reader reader(data);
    std::size_t good = 0;
    while (reader.remaining() > 0) {
        const auto length = reader.take<std::uint32_t>();
        if (!length) break;
        const auto body = reader.bytes(*length);
        if (!body) break;
        auto record = decode(*body);
        if (!record) throw std::runtime_error("corrupt journal record at offset " + std::to_string(good));
        records.push_back(std::move(*record));
        good = reader.position();
    }
    if (good < data.size()) {
        if (::ftruncate(fd_, static_cast<off_t>(good)) != 0) throw_errno("cannot truncate journal");
    }
    return records;
}

void Journal::append(const JournalRecord& record)
{
    const auto bytes = encode(record);
    std::lock_guard lock(mutex_);
    std::size_t written = 0;
    while (written < bytes.size()) {
        const auto n = ::write(fd_, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("journal write failed");
        }
        written += static_cast<std::size_t>(n);
    }
}

}  // namespace zest
