#pragma once

#include "zest/clock.hpp"
#include "zest/codec.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <vector>

namespace zest {

enum class JournalKind : std::uint8_t {
    KvPut = 'K',
    KvDelete = 'D',
    TsAppend = 'T',
    Audit = 'A',
};

struct JournalRecord {
    JournalKind kind = JournalKind::KvPut;
    Timestamp timestamp{0};
    std::string path;
    ContentFormat format = ContentFormat::Text;
    Bytes value;

    bool operator==(const JournalRecord&) const = default;
};

/// Append-only log of length-prefixed records. On disk each record is
///
///   u32 length | u8 kind | u64 timestamp | u16 path length | path
///              | u32 content format | u32 value length | value
///
/// with every integer big-endian and `length` counting the bytes after it.
class Journal {
public:
    /// Opens (creating if needed) the journal at `file`.
    explicit Journal(std::filesystem::path file);
    ~Journal();
    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// Every complete record in file order. A torn record at the tail (from
    /// a crash mid-append) is cut off so later appends start clean.
    std::vector<JournalRecord> replay();

    /// Appends with a single write(2); concurrent appends never interleave.
    void append(const JournalRecord& record);

    const std::filesystem::path& file() const { return file_; }

    static Bytes encode(const JournalRecord& record);
    /// Decodes one record body (without the length prefix).
    static std::optional<JournalRecord> decode(std::string_view body);

private:
    std::filesystem::path file_;
    int fd_ = -1;
    std::mutex mutex_;
};

}  // namespace zest
