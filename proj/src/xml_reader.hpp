#pragma once

// Minimal non-validating XML reader for accessibility dumps: elements,
// attributes, character references, comments, processing instructions and
// DOCTYPE declarations. Character data is discarded.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dmescope::xml {

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    std::size_t offset = 0;  // byte offset of '<'

    std::optional<std::string_view> attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes)
            if (k == key) return std::string_view(v);
        return std::nullopt;
    }
};

/// Throws ParseError naming the byte offset of the first problem.
Element parse(std::string_view document);

}  // namespace dmescope::xml
