#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqaug {

enum class VariableKind { numeric, categorical, binary };

std::string_view to_string(VariableKind kind);
VariableKind parse_variable_kind(std::string_view text);

struct NumericRange {
  double min = 0.0;
  double max = 0.0;
};

/// One column of the cohort. Discrete variables carry an ordered category
/// list; `category_values` holds the physical value used when a category
/// must be compared numerically (defaults to the parsed label or its index).
struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::numeric;
  std::string unit;
  std::vector<std::string> categories;
  std::vector<double> category_values;
  std::optional<NumericRange> numeric_range;

  bool is_discrete() const { return kind != VariableKind::numeric; }
  /// Index of `label` in `categories`, or nullopt.
  std::optional<std::size_t> category_index(std::string_view label) const;
  /// Throws InvalidArgument when the spec breaks its invariants.
  void validate() const;
};

class CohortSchema {
 public:
  CohortSchema() = default;
  CohortSchema(std::vector<VariableSpec> variables, std::size_t series_length);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  const VariableSpec& variable(std::size_t i) const { return variables_.at(i); }
  std::size_t size() const { return variables_.size(); }
  std::size_t series_length() const { return series_length_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t count(VariableKind kind) const;

  /// Stable hash over every field; used to tag checkpoints.
  std::uint64_t hash() const;

  /// Flat key-value text (see `parse`).
  std::string serialize() const;

  /// Parses the flat key-value schema format:
  ///   series_length = 48
  ///   variable.MAP.kind = numeric
  ///   variable.MAP.unit = mmHg
  ///   variable.MAP.range = 20,200
  ///   variable.GCS.categories = 3,4,5
  ///   variable.GCS.values = 3,4,5        (optional)
  /// Variable order is the order of first appearance.
  static CohortSchema parse(std::string_view text);
  static CohortSchema load(const std::filesystem::path& path);

 private:
  std::vector<VariableSpec> variables_;
  std::size_t series_length_ = 0;
};

/// The 20-variable hypotension schema: 9 numeric, 4 categorical and
/// 7 binary measurement flags over 48 hourly steps.
CohortSchema reference_schema();

}  // namespace seqaug
