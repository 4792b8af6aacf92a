#pragma once

#include "zest/codec.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zest {

/// Attenuable bearer token. The signature is the HMAC-SHA256 chain
///   s0 = HMAC(root_secret, identifier), s(i+1) = HMAC(s(i), caveat(i))
/// so caveats can be appended by any holder but never removed.
struct Macaroon {
    using Signature = std::array<std::uint8_t, 32>;

    std::string location;
    std::string identifier;
    std::vector<std::string> caveats;
    Signature signature{};

    bool operator==(const Macaroon&) const = default;
};

enum class CaveatKind { Target, Method, Path };

/// One first-party caveat: "target = <id>", "method = <GET|POST|DELETE>" or
/// "path = <path>", with exactly one space either side of '='.
struct Caveat {
    CaveatKind kind;
    std::string value;

    static std::optional<Caveat> parse(std::string_view text);
    std::string str() const;
};

std::string make_caveat(CaveatKind kind, std::string_view value);

/// What a presented token is checked against.
struct CaveatContext {
    Code method = Code::Get;
    std::string path;
    std::string target;
};

struct VerifyResult {
    bool valid = false;
    std::string reason;

    explicit operator bool() const { return valid; }
    static VerifyResult ok() { return {true, {}}; }
    static VerifyResult invalid(std::string why) { return {false, std::move(why)}; }
};

class TokenParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Macaroon mint(std::string_view root_secret, std::string_view identifier, std::string_view location);

/// Returns a copy of `m` with `caveat` appended and the signature rechained.
Macaroon add_caveat(Macaroon m, std::string_view caveat);

VerifyResult verify(const Macaroon& m, std::string_view root_secret, const CaveatContext& ctx);

/// Server policy on top of verify(): a usable token names a target, a method
/// and a path.
bool has_required_caveats(const Macaroon& m);

/// Mints a token carrying the three scoping caveats in target, method, path
/// order.
Macaroon mint_scoped(std::string_view root_secret, std::string_view identifier,
                     std::string_view location, std::string_view target, Code method,
                     std::string_view path);

/// Line-oriented text form:
///   location <text>
///   identifier <text>
///   caveat <text>        (zero or more)
///   signature <64 lowercase hex>
///   checksum <16 lowercase hex>
/// The checksum is a truncated SHA-256 of the preceding lines; it lets the
/// parser reject corruption of the unsigned location line.
Bytes serialize(const Macaroon& m);
Macaroon deserialize(std::string_view text);

}  // namespace zest
