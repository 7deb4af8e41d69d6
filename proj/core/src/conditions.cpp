#include "cts/conditions.hpp"

#include "cts/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace cts {

ConditionSchema::ConditionSchema(std::vector<SlotSpec> slots) : slots_(std::move(slots)) {
  require(!slots_.empty(), ErrorCode::schema_violation, "condition schema needs at least one slot");
  std::set<std::string> names;
  for (const auto& s : slots_) {
    require(!s.name.empty(), ErrorCode::schema_violation, "condition slot with empty name");
    require(names.insert(s.name).second, ErrorCode::schema_violation,
            "duplicate condition slot '" + s.name + "'");
    if (s.kind == SlotKind::categorical) {
      require(!s.vocabulary.empty(), ErrorCode::schema_violation,
              "categorical slot '" + s.name + "' has an empty vocabulary");
      std::set<std::string> tokens(s.vocabulary.begin(), s.vocabulary.end());
      require(tokens.size() == s.vocabulary.size(), ErrorCode::schema_violation,
              "categorical slot '" + s.name + "' repeats a vocabulary token");
    } else {
      require(s.vocabulary.empty() && !s.ordered, ErrorCode::schema_violation,
              "numeric slot '" + s.name + "' cannot carry a vocabulary");
    }
  }
}

std::optional<std::size_t> ConditionSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].name == name) return i;
  return std::nullopt;
}

std::size_t ConditionSchema::require_index(const std::string& name) const {
  auto idx = index_of(name);
  require(idx.has_value(), ErrorCode::schema_violation, "unknown condition slot '" + name + "'");
  return *idx;
}

std::size_t ConditionSchema::numeric_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.kind == SlotKind::numeric;
  return n;
}

std::size_t ConditionSchema::categorical_count() const noexcept {
  return slots_.size() - numeric_count();
}

CategoryCode ConditionSchema::code_of(std::size_t slot, const std::string& token) const {
  const auto& s = slots_.at(slot);
  require(s.kind == SlotKind::categorical, ErrorCode::schema_violation,
          "slot '" + s.name + "' is not categorical");
  for (std::size_t i = 0; i < s.vocabulary.size(); ++i)
    if (s.vocabulary[i] == token) return CategoryCode{static_cast<std::uint32_t>(i)};
  fail(ErrorCode::schema_violation,
       "category '" + token + "' is not in the vocabulary of slot '" + s.name + "'");
}

const std::string& ConditionSchema::token_of(std::size_t slot, CategoryCode code) const {
  const auto& s = slots_.at(slot);
  require(s.kind == SlotKind::categorical && code.value < s.vocabulary.size(),
          ErrorCode::schema_violation, "invalid category code for slot '" + s.name + "'");
  return s.vocabulary[code.value];
}

std::uint64_t ConditionSchema::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& s : slots_) {
    mix(s.name);
    mix(s.kind == SlotKind::numeric ? "numeric" : (s.ordered ? "ordinal" : "categorical"));
    for (const auto& v : s.vocabulary) mix(v);
  }
  return h;
}

bool operator==(const ConditionSchema& a, const ConditionSchema& b) {
  if (a.slots_.size() != b.slots_.size()) return false;
  for (std::size_t i = 0; i < a.slots_.size(); ++i) {
    const auto& x = a.slots_[i];
    const auto& y = b.slots_[i];
    if (x.name != y.name || x.kind != y.kind || x.vocabulary != y.vocabulary ||
        x.ordered != y.ordered)
      return false;
  }
  return true;
}

double ConditionVector::number(std::size_t i) const {
  const auto* v = std::get_if<double>(&slots_.at(i));
  require(v != nullptr, ErrorCode::schema_violation,
          "condition slot " + std::to_string(i) + " is not numeric");
  return *v;
}

CategoryCode ConditionVector::category(std::size_t i) const {
  const auto* v = std::get_if<CategoryCode>(&slots_.at(i));
  require(v != nullptr, ErrorCode::schema_violation,
          "condition slot " + std::to_string(i) + " is not categorical");
  return *v;
}

void validate(const ConditionVector& c, const ConditionSchema& schema) {
  require(c.size() == schema.size(), ErrorCode::schema_violation,
          "condition has " + std::to_string(c.size()) + " slots, schema expects " +
              std::to_string(schema.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& spec = schema.slot(i);
    if (spec.kind == SlotKind::numeric) {
      const auto* v = std::get_if<double>(&c[i]);
      require(v != nullptr, ErrorCode::schema_violation,
              "slot '" + spec.name + "' expects a number");
      require(std::isfinite(*v), ErrorCode::schema_violation,
              "slot '" + spec.name + "' holds a non-finite number");
    } else {
      const auto* v = std::get_if<CategoryCode>(&c[i]);
      require(v != nullptr, ErrorCode::schema_violation,
              "slot '" + spec.name + "' expects a category");
      require(v->value < spec.vocabulary.size(), ErrorCode::schema_violation,
              "slot '" + spec.name + "' holds an out-of-vocabulary code");
    }
  }
}

ConditionSlot parse_slot(const ConditionSchema& schema, std::size_t slot, const std::string& token) {
  const auto& spec = schema.slot(slot);
  if (spec.kind == SlotKind::categorical) return schema.code_of(slot, token);
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  require(ec == std::errc() && ptr == last && first != last, ErrorCode::parse_error,
          "slot '" + spec.name + "': '" + token + "' is not a number");
  require(std::isfinite(value), ErrorCode::parse_error,
          "slot '" + spec.name + "': non-finite value '" + token + "'");
  return value;
}

std::string format_slot(const ConditionSchema& schema, std::size_t slot, const ConditionSlot& value) {
  if (const auto* code = std::get_if<CategoryCode>(&value)) return schema.token_of(slot, *code);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(value));
  return buf;
}

double ordinal_value(const ConditionSchema& schema, std::size_t slot, const ConditionSlot& value) {
  const auto& spec = schema.slot(slot);
  if (spec.kind == SlotKind::numeric) return std::get<double>(value);
  require(spec.ordered, ErrorCode::unsupported,
          "slot '" + spec.name + "' is nominal and has no numeric order");
  return static_cast<double>(std::get<CategoryCode>(value).value);
}

nlohmann::json to_json(const ConditionSchema& schema) {
  auto slots = nlohmann::json::array();
  for (const auto& s : schema.slots()) {
    nlohmann::json j{{"name", s.name},
                     {"kind", s.kind == SlotKind::numeric ? "numeric" : "categorical"}};
    if (s.kind == SlotKind::categorical) {
      j["vocabulary"] = s.vocabulary;
      if (s.ordered) j["ordered"] = true;
    }
    slots.push_back(std::move(j));
  }
  return nlohmann::json{{"conditions", std::move(slots)}};
}

ConditionSchema schema_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("conditions") && j["conditions"].is_array(),
          ErrorCode::parse_error, "schema JSON needs a 'conditions' array");
  std::vector<SlotSpec> slots;
  for (const auto& e : j["conditions"]) {
    require(e.contains("name") && e.contains("kind"), ErrorCode::parse_error,
            "schema slot needs 'name' and 'kind'");
    SlotSpec s;
    s.name = e["name"].get<std::string>();
    const auto kind = e["kind"].get<std::string>();
    if (kind == "numeric") {
      s.kind = SlotKind::numeric;
    } else if (kind == "categorical" || kind == "ordinal") {
      s.kind = SlotKind::categorical;
      require(e.contains("vocabulary"), ErrorCode::parse_error,
              "categorical slot '" + s.name + "' needs a 'vocabulary'");
      s.vocabulary = e["vocabulary"].get<std::vector<std::string>>();
      s.ordered = kind == "ordinal" || e.value("ordered", false);
    } else {
      fail(ErrorCode::parse_error, "slot '" + s.name + "' has unknown kind '" + kind + "'");
    }
    slots.push_back(std::move(s));
  }
  return ConditionSchema(std::move(slots));
}

nlohmann::json to_json(const ConditionVector& c, const ConditionSchema& schema) {
  validate(c, schema);
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& name = schema.slot(i).name;
    if (const auto* code = std::get_if<CategoryCode>(&c[i]))
      j[name] = schema.token_of(i, *code);
    else
      j[name] = std::get<double>(c[i]);
  }
  return j;
}

ConditionVector condition_from_json(const nlohmann::json& j, const ConditionSchema& schema) {
  require(j.is_object(), ErrorCode::parse_error, "condition JSON must be an object");
  std::vector<ConditionSlot> slots;
  slots.reserve(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& spec = schema.slot(i);
    require(j.contains(spec.name), ErrorCode::schema_violation,
            "condition is missing slot '" + spec.name + "'");
    const auto& v = j[spec.name];
    if (spec.kind == SlotKind::numeric) {
      require(v.is_number(), ErrorCode::schema_violation,
              "slot '" + spec.name + "' expects a number");
      slots.emplace_back(v.get<double>());
    } else {
      require(v.is_string(), ErrorCode::schema_violation,
              "slot '" + spec.name + "' expects a category token");
      slots.emplace_back(schema.code_of(i, v.get<std::string>()));
    }
  }
  require(j.size() == schema.size(), ErrorCode::schema_violation,
          "condition has slots the schema does not declare");
  ConditionVector c(std::move(slots));
  validate(c, schema);
  return c;
}

}  // namespace cts
