#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace cts {

enum class SlotKind { numeric, categorical };

struct SlotSpec {
  std::string name;
  SlotKind kind = SlotKind::numeric;
  std::vector<std::string> vocabulary;  // categorical only, in declared order
  bool ordered = false;                 // ordinal categorical: rank = vocabulary position
};

/// Index into a categorical slot's vocabulary.
struct CategoryCode {
  std::uint32_t value = 0;
  friend auto operator<=>(const CategoryCode&, const CategoryCode&) = default;
};

using ConditionSlot = std::variant<double, CategoryCode>;

class ConditionSchema {
 public:
  ConditionSchema() = default;
  explicit ConditionSchema(std::vector<SlotSpec> slots);

  std::size_t size() const noexcept { return slots_.size(); }
  const SlotSpec& slot(std::size_t i) const { return slots_.at(i); }
  const std::vector<SlotSpec>& slots() const noexcept { return slots_; }

  std::optional<std::size_t> index_of(const std::string& name) const;
  std::size_t require_index(const std::string& name) const;
  std::size_t numeric_count() const noexcept;
  std::size_t categorical_count() const noexcept;

  CategoryCode code_of(std::size_t slot, const std::string& token) const;
  const std::string& token_of(std::size_t slot, CategoryCode code) const;

  /// FNV-1a over a canonical rendering; stored in bundles to detect drift.
  std::uint64_t hash() const;

  friend bool operator==(const ConditionSchema& a, const ConditionSchema& b);

 private:
  std::vector<SlotSpec> slots_;
};

class ConditionVector {
 public:
  ConditionVector() = default;
  explicit ConditionVector(std::vector<ConditionSlot> slots) : slots_(std::move(slots)) {}

  std::size_t size() const noexcept { return slots_.size(); }
  const ConditionSlot& operator[](std::size_t i) const { return slots_.at(i); }
  ConditionSlot& operator[](std::size_t i) { return slots_.at(i); }
  const std::vector<ConditionSlot>& slots() const noexcept { return slots_; }

  double number(std::size_t i) const;
  CategoryCode category(std::size_t i) const;

  friend bool operator==(const ConditionVector&, const ConditionVector&) = default;

 private:
  std::vector<ConditionSlot> slots_;
};

/// Throws schema_violation when slot kinds, codes, or finiteness disagree.
void validate(const ConditionVector& c, const ConditionSchema& schema);

/// Parses a token as the slot expects: a number for numeric slots, a
/// vocabulary entry for categorical ones.
ConditionSlot parse_slot(const ConditionSchema& schema, std::size_t slot, const std::string& token);
std::string format_slot(const ConditionSchema& schema, std::size_t slot, const ConditionSlot& value);

/// Numeric value of a slot: the number itself, or the vocabulary rank for
/// ordered categoricals. Nominal categoricals have no numeric view.
double ordinal_value(const ConditionSchema& schema, std::size_t slot, const ConditionSlot& value);

nlohmann::json to_json(const ConditionSchema& schema);
ConditionSchema schema_from_json(const nlohmann::json& j);

/// Conditions are rendered as JSON objects keyed by slot name.
nlohmann::json to_json(const ConditionVector& c, const ConditionSchema& schema);
ConditionVector condition_from_json(const nlohmann::json& j, const ConditionSchema& schema);

}  // namespace cts
