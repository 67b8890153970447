#include "collab/json_schema.hpp"

#include <regex>

namespace collab {

namespace {

using nlohmann::json;

bool has_type(const json& doc, const std::string& type) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  if (type == "number") return doc.is_number();
  if (type == "integer") {
    if (doc.is_number_integer()) return true;
    if (doc.is_number_float()) {
      const double x = doc.get<double>();
      return x == static_cast<double>(static_cast<long long>(x));
    }
    return false;
  }
  return false;
}

void check(const json& root, const json& schema, const json& doc, const std::string& path,
           std::vector<std::string>& out) {
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) out.push_back(path + ": not allowed");
    return;
  }
  if (!schema.is_object()) return;
  if (auto it = schema.find("$ref"); it != schema.end()) {
    // Local references only ("#/$defs/name").
    const std::string ref = it->get<std::string>();
    if (ref.rfind("#", 0) != 0) {
      out.push_back(path + ": unsupported $ref " + ref);
      return;
    }
    check(root, root.at(json::json_pointer(ref.substr(1))), doc, path, out);
  }
  auto fail = [&](const std::string& msg) { out.push_back((path.empty() ? "/" : path) + ": " + msg); };

  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = has_type(doc, it->get<std::string>());
    } else {
      for (const auto& t : *it) ok = ok || has_type(doc, t.get<std::string>());
    }
    if (!ok) {
      fail("expected type " + it->dump());
      return;
    }
  }
  if (auto it = schema.find("enum"); it != schema.end()) {
    bool ok = false;
    for (const auto& e : *it) ok = ok || e == doc;
    if (!ok) fail("value not in " + it->dump());
  }
  if (auto it = schema.find("const"); it != schema.end() && *it != doc) fail("expected " + it->dump());

  if (doc.is_number()) {
    const double x = doc.get<double>();
    if (auto it = schema.find("minimum"); it != schema.end() && x < it->get<double>())
      fail("below minimum " + it->dump());
    if (auto it = schema.find("maximum"); it != schema.end() && x > it->get<double>())
      fail("above maximum " + it->dump());
    if (auto it = schema.find("exclusiveMinimum"); it != schema.end() && x <= it->get<double>())
      fail("must exceed " + it->dump());
    if (auto it = schema.find("exclusiveMaximum"); it != schema.end() && x >= it->get<double>())
      fail("must be below " + it->dump());
  }
  if (doc.is_string()) {
    if (auto it = schema.find("minLength"); it != schema.end() && doc.get<std::string>().size() < it->get<std::size_t>())
      fail("string too short");
    if (auto it = schema.find("pattern"); it != schema.end() &&
        !std::regex_search(doc.get<std::string>(), std::regex(it->get<std::string>())))
      fail("does not match " + it->dump());
  }
  if (doc.is_array()) {
    if (auto it = schema.find("minItems"); it != schema.end() && doc.size() < it->get<std::size_t>())
      fail("fewer than " + it->dump() + " items");
    if (auto it = schema.find("maxItems"); it != schema.end() && doc.size() > it->get<std::size_t>())
      fail("more than " + it->dump() + " items");
    if (auto it = schema.find("items"); it != schema.end())
      for (std::size_t i = 0; i < doc.size(); ++i) check(root, *it, doc[i], path + "/" + std::to_string(i), out);
  }
  if (doc.is_object()) {
    if (auto it = schema.find("required"); it != schema.end())
      for (const auto& key : *it)
        if (!doc.contains(key.get<std::string>())) fail("missing required key '" + key.get<std::string>() + "'");
    const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    const json* patterns = schema.contains("patternProperties") ? &schema["patternProperties"] : nullptr;
    const json* additional = schema.contains("additionalProperties") ? &schema["additionalProperties"] : nullptr;
    for (const auto& [key, value] : doc.items()) {
      bool matched = false;
      if (props && props->contains(key)) {
        check(root, (*props)[key], value, path + "/" + key, out);
        matched = true;
      }
      if (patterns)
        for (const auto& [pat, sub] : patterns->items())
          if (std::regex_search(key, std::regex(pat))) {
            check(root, sub, value, path + "/" + key, out);
            matched = true;
          }
      if (!matched && additional) {
        if (additional->is_boolean() && !additional->get<bool>())
          fail("unexpected key '" + key + "'");
        else
          check(root, *additional, value, path + "/" + key, out);
      }
    }
  }
  if (auto it = schema.find("oneOf"); it != schema.end()) {
    int passing = 0;
    for (const auto& sub : *it) {
      std::vector<std::string> tmp;
      check(root, sub, doc, path, tmp);
      if (tmp.empty()) ++passing;
    }
    if (passing != 1) fail("matches " + std::to_string(passing) + " of the oneOf alternatives");
  }
  if (auto it = schema.find("anyOf"); it != schema.end()) {
    bool any = false;
    for (const auto& sub : *it) {
      std::vector<std::string> tmp;
      check(root, sub, doc, path, tmp);
      any = any || tmp.empty();
    }
    if (!any) fail("matches none of the anyOf alternatives");
  }
}

}  // namespace

std::vector<std::string> validate_schema(const nlohmann::json& schema, const nlohmann::json& doc) {
  std::vector<std::string> out;
  check(schema, schema, doc, "", out);
  return out;
}

}  // namespace collab
