#include "zest/catalogue.hpp"

#include <nlohmann/json.hpp>

namespace zest {

namespace {

nlohmann::json rel(std::string_view rel, std::string_view val)
{
    return {{"rel", rel}, {"val", val}};
}

}  // namespace

std::string render_catalogue(std::string_view description, const std::vector<CatalogueItem>& items)
{
    nlohmann::json doc;
    doc["catalogue-metadata"] = nlohmann::json::array({
        rel(kRelContentType, "application/vnd.hypercat.catalogue+json"),
        rel(kRelDescription, description),
    });
    auto& out = doc["items"] = nlohmann::json::array();
    for (const auto& item : items) {
        auto meta = nlohmann::json::array();
        for (const auto& [r, v] : item.metadata) meta.push_back(rel(r, v));
        out.push_back({{"href", item.href}, {"item-metadata", std::move(meta)}});
    }
    return doc.dump();
}

}  // namespace zest
