#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zest {

/// Raw octets: frames, tokens, option values and payloads.
using Bytes = std::string;

enum class Code : std::uint8_t {
    Get = 1,
    Post = 2,
    Delete = 4,

    AckPost = 65,
    AckDelete = 66,
    AckPayload = 69,

    BadRequest = 128,
    Unauthorized = 129,
    NotAcceptable = 134,
    RequestEntityTooLarge = 141,
    UnsupportedContentFormat = 143,
    InternalServerError = 160,
    ServiceUnavailable = 163,
};

/// Maps a raw header byte onto a listed code; any other value is rejected.
std::optional<Code> code_from_byte(std::uint8_t value);
bool is_request(Code code);
/// Human-readable meaning, e.g. "Acknowledge (POST)".
std::string_view code_meaning(Code code);
/// "GET", "POST", "DELETE" for requests; numeric text otherwise.
std::string_view method_name(Code code);
std::optional<Code> method_from_name(std::string_view name);

enum class OptionCode : std::uint16_t {
    UriHost = 3,
    Observe = 6,
    UriPath = 11,
    ContentFormat = 12,
    MaxAge = 14,
    PublicKey = 2048,
};

std::string_view option_name(OptionCode code);
bool is_known_option(std::uint16_t code);

enum class ContentFormat : std::uint32_t {
    Text = 0,
    Binary = 42,
    Json = 50,
};

std::optional<ContentFormat> content_format_from_value(std::uint64_t value);
std::optional<ContentFormat> content_format_from_name(std::string_view name);
std::string_view content_format_name(ContentFormat format);

enum class ObserveMode { Data, Audit, Notify };

std::optional<ObserveMode> observe_mode_from_name(std::string_view name);
std::string_view observe_mode_name(ObserveMode mode);

struct Option {
    std::uint16_t code = 0;
    Bytes value;

    bool operator==(const Option&) const = default;
};

struct Message {
    Code code = Code::Get;
    Bytes token;
    std::vector<Option> options;
    Bytes payload;

    bool operator==(const Message&) const = default;

    /// Value of the last occurrence of `code`, if any.
    const Bytes* find(OptionCode code) const;
    bool has(OptionCode code) const { return find(code) != nullptr; }

    /// Appends a string-valued option.
    Message& add(OptionCode code, std::string_view value);
    /// Appends a 4-byte unsigned option (content_format, max_age).
    Message& add_uint(OptionCode code, std::uint64_t value);
};

static constexpr std::size_t kHeaderSize = 4;
static constexpr std::size_t kMaxOptions = 255;
static constexpr std::size_t kMaxFieldLength = 65535;

/// Raised for messages that cannot be represented on the wire. This is a
/// caller bug, never a peer's fault.
class EncodeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised for byte strings that are not a well-formed message.
class MalformedMessage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Bytes encode_message(const Message& message);
Message decode_message(std::string_view bytes);

Option encode_uint_option(OptionCode code, std::uint64_t value);
/// Reads a numeric option value. Throws MalformedMessage unless it is
/// exactly four bytes.
std::uint32_t decode_uint_option(std::string_view value);

enum class MessageKind {
    GetRequest,
    GetResponse,
    PostRequest,
    PostResponse,
    DeleteRequest,
    DeleteResponse,
};

std::string_view message_kind_name(MessageKind kind);

struct OptionViolation {
    enum class Reason { Missing, NotAllowed };

    OptionCode option;
    Reason reason;

    bool operator==(const OptionViolation&) const = default;

    /// e.g. "uri_host mandatory", "observe not allowed".
    std::string describe() const;
};

enum class OptionRule { Absent, Optional, Mandatory };

/// Cell of the per-kind option matrix.
OptionRule option_rule(MessageKind kind, OptionCode option);

/// Checks the known options of `message` against the matrix for `kind`.
/// Unknown option codes are ignored; order and duplicates do not matter.
std::vector<OptionViolation> validate_options(const Message& message, MessageKind kind);

}  // namespace zest
