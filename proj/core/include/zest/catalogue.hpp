#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace zest {

inline constexpr std::string_view kRelDescription = "urn:X-hypercat:rels:hasDescription:en";
inline constexpr std::string_view kRelContentType = "urn:X-hypercat:rels:isContentType";

struct CatalogueItem {
    std::string href;
    /// (rel, val) pairs, emitted in order.
    std::vector<std::pair<std::string, std::string>> metadata;
};

/// HyperCat document:
///   {"catalogue-metadata":[...],"items":[{"href":...,"item-metadata":[...]}]}
std::string render_catalogue(std::string_view description, const std::vector<CatalogueItem>& items);

}  // namespace zest
