#include "summjudge/property.hpp"

namespace summjudge {

std::string_view to_string(Property p) {
  switch (p) {
    case Property::conciseness: return "conciseness";
    case Property::relevance: return "relevance";
    case Property::coherence: return "coherence";
    case Property::readability: return "readability";
    case Property::consistency: return "consistency";
  }
  return "unknown";
}

std::optional<Property> parse_property(std::string_view name) {
  for (auto p : kAllProperties) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

}  // namespace summjudge
