#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace summjudge {

/// Summary-quality properties. The first four are scored by both evaluation
/// families; consistency is only used by the judge prompts.
enum class Property { conciseness, relevance, coherence, readability, consistency };

inline constexpr std::array<Property, 4> kScoredProperties = {
    Property::conciseness, Property::relevance, Property::coherence, Property::readability};

inline constexpr std::array<Property, 5> kAllProperties = {
    Property::conciseness, Property::relevance, Property::coherence, Property::readability,
    Property::consistency};

std::string_view to_string(Property p);
std::optional<Property> parse_property(std::string_view name);

}  // namespace summjudge
