#include "zest/transport.hpp"

#include <charconv>

namespace zest {

EndpointAddress EndpointAddress::memory(std::string name)
{
    return EndpointAddress{Scheme::Memory, std::move(name), 0, {}};
}

EndpointAddress EndpointAddress::network(std::string host, int port, std::string server_key)
{
    return EndpointAddress{Scheme::Network, std::move(host), port, std::move(server_key)};
}

EndpointAddress EndpointAddress::parse(std::string_view text)
{
    if (text.starts_with("mem://")) {
        const auto name = text.substr(6);
        if (name.empty()) throw std::invalid_argument("empty in-memory address");
        return memory(std::string(name));
    }
    if (text.starts_with("tcp://")) {
        const auto rest = text.substr(6);
        const auto colon = rest.rfind(':');
        if (colon == std::string_view::npos || colon == 0) {
            throw std::invalid_argument("expected tcp://host:port, got " + std::string(text));
        }
        int port = 0;
        const auto digits = rest.substr(colon + 1);
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
        if (ec != std::errc{} || end != digits.data() + digits.size() || port <= 0 || port > 65535) {
            throw std::invalid_argument("bad port in " + std::string(text));
        }
        return network(std::string(rest.substr(0, colon)), port);
    }
    throw std::invalid_argument("unsupported address scheme: " + std::string(text));
}

EndpointAddress EndpointAddress::with_key(std::string key) const
{
    auto copy = *this;
    copy.server_key = std::move(key);
    return copy;
}

std::string EndpointAddress::str() const
{
    if (scheme == Scheme::Memory) return "mem://" + host;
    return "tcp://" + host + ":" + std::to_string(port);
}

}  // namespace zest
