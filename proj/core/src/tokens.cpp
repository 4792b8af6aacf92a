#include "zest/tokens.hpp"

#include "zest/encoding.hpp"
#include "zest/path.hpp"

#include <sodium.h>

#include <algorithm>

namespace zest {

namespace {

using Signature = Macaroon::Signature;

constexpr std::size_t kChecksumHexLength = 16;

Signature hmac(std::string_view key, std::string_view data)
{
    crypto_auth_hmacsha256_state state;
    crypto_auth_hmacsha256_init(&state, reinterpret_cast<const unsigned char*>(key.data()), key.size());
    crypto_auth_hmacsha256_update(&state, reinterpret_cast<const unsigned char*>(data.data()),
                                  data.size());
    Signature out;
    crypto_auth_hmacsha256_final(&state, out.data());
    return out;
}

std::string_view as_view(const Signature& s)
{
    return {reinterpret_cast<const char*>(s.data()), s.size()};
}

Signature chain(std::string_view root_secret, const Macaroon& m)
{
    auto sig = hmac(root_secret, m.identifier);
    for (const auto& caveat : m.caveats) {
        sig = hmac(as_view(sig), caveat);
    }
    return sig;
}

std::string checksum(std::string_view body)
{
    std::array<unsigned char, crypto_hash_sha256_BYTES> digest;
    crypto_hash_sha256(digest.data(), reinterpret_cast<const unsigned char*>(body.data()), body.size());
    return to_hex({reinterpret_cast<const char*>(digest.data()), digest.size()})
        .substr(0, kChecksumHexLength);
}

bool single_line(std::string_view s)
{
    return s.find('\n') == std::string_view::npos;
}

std::string_view kind_keyword(CaveatKind kind)
{
    switch (kind) {
    case CaveatKind::Target: return "target";
    case CaveatKind::Method: return "method";
    case CaveatKind::Path: return "path";
    }
    return "";
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool at_end() const { return pos_ == text_.size(); }
    std::size_t offset() const { return pos_; }

    /// Next line's payload after "<keyword> ", or nullopt when the next line
    /// does not start with that keyword.
    std::optional<std::string_view> take(std::string_view keyword)
    {
        const auto rest = text_.substr(pos_);
        const auto eol = rest.find('\n');
        if (eol == std::string_view::npos) return std::nullopt;
        const auto line = rest.substr(0, eol);
        if (line.size() < keyword.size() + 1 || !line.starts_with(keyword) ||
            line[keyword.size()] != ' ') {
            return std::nullopt;
        }
        pos_ += eol + 1;
        return line.substr(keyword.size() + 1);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::optional<Caveat> Caveat::parse(std::string_view text)
{
    const auto sep = text.find(" = ");
    if (sep == std::string_view::npos) return std::nullopt;
    const auto key = text.substr(0, sep);
    const auto value = text.substr(sep + 3);
    if (value.empty()) return std::nullopt;
    if (key == "target") return Caveat{CaveatKind::Target, std::string(value)};
    if (key == "method") {
        if (!method_from_name(value)) return std::nullopt;
        return Caveat{CaveatKind::Method, std::string(value)};
    }
    if (key == "path") {
        if (value != "*" && !is_valid_path(value)) return std::nullopt;
        return Caveat{CaveatKind::Path, std::string(value)};
    }
    return std::nullopt;
}

std::string Caveat::str() const
{
    return make_caveat(kind, value);
}

std::string make_caveat(CaveatKind kind, std::string_view value)
{
    return std::string(kind_keyword(kind)) + " = " + std::string(value);
}

Macaroon mint(std::string_view root_secret, std::string_view identifier, std::string_view location)
{
    if (root_secret.empty()) throw std::invalid_argument("root secret must not be empty");
    if (!single_line(identifier) || !single_line(location)) {
        throw std::invalid_argument("identifier and location must be single-line");
    }
    Macaroon m;
    m.location = location;
    m.identifier = identifier;
    m.signature = hmac(root_secret, identifier);
    return m;
}

Macaroon add_caveat(Macaroon m, std::string_view caveat)
{
    if (!single_line(caveat)) throw std::invalid_argument("caveat must be single-line");
    m.signature = hmac(as_view(m.signature), caveat);
    m.caveats.emplace_back(caveat);
    return m;
}

VerifyResult verify(const Macaroon& m, std::string_view root_secret, const CaveatContext& ctx)
{
    if (root_secret.empty()) return VerifyResult::invalid("no root secret");
    const auto expected = chain(root_secret, m);
    if (sodium_memcmp(expected.data(), m.signature.data(), expected.size()) != 0) {
        return VerifyResult::invalid("signature mismatch");
    }
    for (const auto& text : m.caveats) {
        const auto caveat = Caveat::parse(text);
        if (!caveat) return VerifyResult::invalid("malformed caveat");
        switch (caveat->kind) {
        case CaveatKind::Target:
            if (caveat->value != ctx.target) return VerifyResult::invalid("target mismatch");
            break;
        case CaveatKind::Method:
            if (caveat->value != method_name(ctx.method)) return VerifyResult::invalid("method mismatch");
            break;
        case CaveatKind::Path:
            if (!path_matches(caveat->value, ctx.path)) return VerifyResult::invalid("path mismatch");
            break;
        }
    }
    return VerifyResult::ok();
}

bool has_required_caveats(const Macaroon& m)
{
    bool target = false, method = false, path = false;
    for (const auto& text : m.caveats) {
        const auto caveat = Caveat::parse(text);
        if (!caveat) continue;
        target |= caveat->kind == CaveatKind::Target;
        method |= caveat->kind == CaveatKind::Method;
        path |= caveat->kind == CaveatKind::Path;
    }
    return target && method && path;
}

Macaroon mint_scoped(std::string_view root_secret, std::string_view identifier,
                     std::string_view location, std::string_view target, Code method,
                     std::string_view path)
{
    auto m = mint(root_secret, identifier, location);
    m = add_caveat(std::move(m), make_caveat(CaveatKind::Target, target));
    m = add_caveat(std::move(m), make_caveat(CaveatKind::Method, method_name(method)));
    return add_caveat(std::move(m), make_caveat(CaveatKind::Path, path));
}

Bytes serialize(const Macaroon& m)
{
    Bytes out;
    out += "location " + m.location + "\n";
    out += "identifier " + m.identifier + "\n";
    for (const auto& caveat : m.caveats) {
        out += "caveat " + caveat + "\n";
    }
    out += "signature " + to_hex(as_view(m.signature)) + "\n";
    out += "checksum " + checksum(out) + "\n";
    return out;
}

Macaroon deserialize(std::string_view text)
{
    if (text.empty()) throw TokenParseError("empty token");
    LineReader reader(text);
    Macaroon m;

    const auto location = reader.take("location");
    if (!location) throw TokenParseError("missing location line");
    m.location = *location;

    const auto identifier = reader.take("identifier");
    if (!identifier) throw TokenParseError("missing identifier line");
    m.identifier = *identifier;

    while (auto caveat = reader.take("caveat")) {
        m.caveats.emplace_back(*caveat);
    }

    const auto signature = reader.take("signature");
    if (!signature) throw TokenParseError("missing signature line");
    const auto raw = from_hex(*signature);
    if (!raw || raw->size() != m.signature.size()) throw TokenParseError("bad signature encoding");
    std::copy(raw->begin(), raw->end(), reinterpret_cast<char*>(m.signature.data()));

    const auto body = text.substr(0, reader.offset());
    const auto sum = reader.take("checksum");
    if (!sum || *sum != checksum(body)) throw TokenParseError("checksum mismatch");
    if (!reader.at_end()) throw TokenParseError("trailing data after token");
    return m;
}

}  // namespace zest
