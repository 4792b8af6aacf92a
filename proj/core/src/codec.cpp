#include "zest/codec.hpp"

#include <array>
#include <limits>

namespace zest {

namespace {

void put_u16(Bytes& out, std::uint16_t v)
{
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
}

std::uint16_t get_u16(std::string_view b, std::size_t at)
{
    return static_cast<std::uint16_t>((static_cast<std::uint8_t>(b[at]) << 8) |
                                      static_cast<std::uint8_t>(b[at + 1]));
}

constexpr std::array kOptionOrder = {
    OptionCode::UriPath,  OptionCode::UriHost, OptionCode::ContentFormat,
    OptionCode::Observe,  OptionCode::MaxAge,  OptionCode::PublicKey,
};

}  // namespace

std::optional<Code> code_from_byte(std::uint8_t value)
{
    switch (value) {
    case 1: case 2: case 4:
    case 65: case 66: case 69:
    case 128: case 129: case 134: case 141: case 143: case 160: case 163:
        return static_cast<Code>(value);
    default:
        return std::nullopt;
    }
}

bool is_request(Code code) { return static_cast<std::uint8_t>(code) < 64; }

std::string_view code_meaning(Code code)
{
    switch (code) {
    case Code::Get: return "GET";
    case Code::Post: return "POST";
    case Code::Delete: return "DELETE";
    case Code::AckPost: return "Acknowledge (POST)";
    case Code::AckDelete: return "Acknowledge (DELETE)";
    case Code::AckPayload: return "Acknowledge with payload (GET/POST)";
    case Code::BadRequest: return "Bad request";
    case Code::Unauthorized: return "Unauthorised";
    case Code::NotAcceptable: return "Not acceptable";
    case Code::RequestEntityTooLarge: return "Request entity too large";
    case Code::UnsupportedContentFormat: return "Unsupported content format";
    case Code::InternalServerError: return "Internal server error";
    case Code::ServiceUnavailable: return "Service unavailable";
    }
    return "unknown";
}

std::string_view method_name(Code code)
{
    switch (code) {
    case Code::Get: return "GET";
    case Code::Post: return "POST";
    case Code::Delete: return "DELETE";
    default: return code_meaning(code);
    }
}

std::optional<Code> method_from_name(std::string_view name)
{
    if (name == "GET") return Code::Get;
    if (name == "POST") return Code::Post;
    if (name == "DELETE") return Code::Delete;
    return std::nullopt;
}

std::string_view option_name(OptionCode code)
{
    switch (code) {
    case OptionCode::UriHost: return "uri_host";
    case OptionCode::Observe: return "observe";
    case OptionCode::UriPath: return "uri_path";
    case OptionCode::ContentFormat: return "content_format";
    case OptionCode::MaxAge: return "max_age";
    case OptionCode::PublicKey: return "public_key";
    }
    return "unknown";
}

bool is_known_option(std::uint16_t code)
{
    switch (code) {
    case 3: case 6: case 11: case 12: case 14: case 2048:
        return true;
    default:
        return false;
    }
}

std::optional<ContentFormat> content_format_from_value(std::uint64_t value)
{
    switch (value) {
    case 0: return ContentFormat::Text;
    case 42: return ContentFormat::Binary;
    case 50: return ContentFormat::Json;
    default: return std::nullopt;
    }
}

std::optional<ContentFormat> content_format_from_name(std::string_view name)
{
    if (name == "text") return ContentFormat::Text;
    if (name == "binary") return ContentFormat::Binary;
    if (name == "json") return ContentFormat::Json;
    return std::nullopt;
}

std::string_view content_format_name(ContentFormat format)
{
    switch (format) {
    case ContentFormat::Text: return "text";
    case ContentFormat::Binary: return "binary";
    case ContentFormat::Json: return "json";
    }
    return "unknown";
}

std::optional<ObserveMode> observe_mode_from_name(std::string_view name)
{
    if (name == "data") return ObserveMode::Data;
    if (name == "audit") return ObserveMode::Audit;
    if (name == "notify") return ObserveMode::Notify;
    return std::nullopt;
}

std::string_view observe_mode_name(ObserveMode mode)
{
    switch (mode) {
    case ObserveMode::Data: return "data";
    case ObserveMode::Audit: return "audit";
    case ObserveMode::Notify: return "notify";
    }
    return "unknown";
}

const Bytes* Message::find(OptionCode code) const
{
    const auto raw = static_cast<std::uint16_t>(code);
    for (auto it = options.rbegin(); it != options.rend(); ++it) {
        if (it->code == raw) return &it->value;
    }
    return nullptr;
}

Message& Message::add(OptionCode code, std::string_view value)
{
    options.push_back(Option{static_cast<std::uint16_t>(code), Bytes(value)});
    return *this;
}

Message& Message::add_uint(OptionCode code, std::uint64_t value)
{
    options.push_back(encode_uint_option(code, value));
    return *this;
}

Bytes encode_message(const Message& message)
{
    if (message.options.size() > kMaxOptions) {
        throw EncodeError("too many options: " + std::to_string(message.options.size()));
    }
    if (message.token.size() > kMaxFieldLength) {
        throw EncodeError("token too long: " + std::to_string(message.token.size()));
    }

    std::size_t size = kHeaderSize + message.token.size() + message.payload.size();
    for (const auto& option : message.options) {
        if (option.value.size() > kMaxFieldLength) {
            throw EncodeError("option value too long: " + std::to_string(option.value.size()));
        }
        size += 4 + option.value.size();
    }

    Bytes out;
    out.reserve(size);
    out.push_back(static_cast<char>(message.code));
    out.push_back(static_cast<char>(message.options.size()));
    put_u16(out, static_cast<std::uint16_t>(message.token.size()));
    out += message.token;
    for (const auto& option : message.options) {
        put_u16(out, option.code);
        put_u16(out, static_cast<std::uint16_t>(option.value.size()));
        out += option.value;
    }
    out += message.payload;
    return out;
}

Message decode_message(std::string_view bytes)
{
    if (bytes.size() < kHeaderSize) {
        throw MalformedMessage("truncated header");
    }
    Message message;
    const auto code = code_from_byte(static_cast<std::uint8_t>(bytes[0]));
    if (!code) {
        throw MalformedMessage("unknown code " + std::to_string(static_cast<std::uint8_t>(bytes[0])));
    }
    message.code = *code;
    const std::size_t option_count = static_cast<std::uint8_t>(bytes[1]);
    const std::size_t token_length = get_u16(bytes, 2);

    std::size_t at = kHeaderSize;
    if (bytes.size() - at < token_length) {
        throw MalformedMessage("truncated token");
    }
    message.token.assign(bytes.substr(at, token_length));
    at += token_length;

    message.options.reserve(option_count);
    for (std::size_t i = 0; i < option_count; ++i) {
        if (bytes.size() - at < 4) {
            throw MalformedMessage("truncated option header");
        }
        Option option;
        option.code = get_u16(bytes, at);
        const std::size_t length = get_u16(bytes, at + 2);
        at += 4;
        if (bytes.size() - at < length) {
            throw MalformedMessage("truncated option value");
        }
        option.value.assign(bytes.substr(at, length));
        at += length;
        message.options.push_back(std::move(option));
    }
    message.payload.assign(bytes.substr(at));
    return message;
}

Option encode_uint_option(OptionCode code, std::uint64_t value)
{
    if (code != OptionCode::ContentFormat && code != OptionCode::MaxAge) {
        throw EncodeError(std::string(option_name(code)) + " is not a numeric option");
    }
    if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw EncodeError("numeric option out of range: " + std::to_string(value));
    }
    Option option{static_cast<std::uint16_t>(code), Bytes(4, '\0')};
    for (int i = 0; i < 4; ++i) {
        option.value[static_cast<std::size_t>(i)] = static_cast<char>((value >> (8 * (3 - i))) & 0xff);
    }
    return option;
}

std::uint32_t decode_uint_option(std::string_view value)
{
    if (value.size() != 4) {
        throw MalformedMessage("numeric option must be 4 bytes, got " + std::to_string(value.size()));
    }
    std::uint32_t v = 0;
    for (char c : value) {
        v = (v << 8) | static_cast<std::uint8_t>(c);
    }
    return v;
}

std::string_view message_kind_name(MessageKind kind)
{
    switch (kind) {
    case MessageKind::GetRequest: return "GET-req";
    case MessageKind::GetResponse: return "GET-resp";
    case MessageKind::PostRequest: return "POST-req";
    case MessageKind::PostResponse: return "POST-resp";
    case MessageKind::DeleteRequest: return "DELETE-req";
    case MessageKind::DeleteResponse: return "DELETE-resp";
    }
    return "unknown";
}

std::string OptionViolation::describe() const
{
    return std::string(option_name(option)) +
           (reason == Reason::Missing ? " mandatory" : " not allowed");
}

OptionRule option_rule(MessageKind kind, OptionCode option)
{
    using enum OptionCode;
    switch (kind) {
    case MessageKind::GetRequest:
        switch (option) {
        case UriPath: case UriHost: case ContentFormat: return OptionRule::Mandatory;
        case Observe: case MaxAge: return OptionRule::Optional;
        default: return OptionRule::Absent;
        }
    case MessageKind::GetResponse:
        switch (option) {
        case ContentFormat: return OptionRule::Mandatory;
        case PublicKey: return OptionRule::Optional;
        default: return OptionRule::Absent;
        }
    case MessageKind::PostRequest:
    case MessageKind::DeleteRequest:
        switch (option) {
        case UriPath: case UriHost: case ContentFormat: return OptionRule::Mandatory;
        default: return OptionRule::Absent;
        }
    case MessageKind::PostResponse:
        return option == ContentFormat ? OptionRule::Optional : OptionRule::Absent;
    case MessageKind::DeleteResponse:
        return OptionRule::Absent;
    }
    return OptionRule::Absent;
}

std::vector<OptionViolation> validate_options(const Message& message, MessageKind kind)
{
    std::vector<OptionViolation> violations;
    for (OptionCode option : kOptionOrder) {
        const bool present = message.has(option);
        switch (option_rule(kind, option)) {
        case OptionRule::Mandatory:
            if (!present) violations.push_back({option, OptionViolation::Reason::Missing});
            break;
        case OptionRule::Absent:
            if (present) violations.push_back({option, OptionViolation::Reason::NotAllowed});
            break;
        case OptionRule::Optional:
            break;
        }
    }
    return violations;
}

}  // namespace zest
