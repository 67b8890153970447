#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace collab {

/// Validates `doc` against a JSON Schema subset: type, enum, const, required,
/// properties, patternProperties, additionalProperties, items, minItems,
/// maxItems, minimum, maximum, exclusiveMinimum, exclusiveMaximum, minLength,
/// oneOf, anyOf. Returns one message per violation, prefixed by its JSON pointer.
std::vector<std::string> validate_schema(const nlohmann::json& schema, const nlohmann::json& doc);

}  // namespace collab
