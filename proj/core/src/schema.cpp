#include "seqaug/schema.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::numeric:
      return "numeric";
    case VariableKind::categorical:
      return "categorical";
    case VariableKind::binary:
      return "binary";
  }
  return "numeric";
}

VariableKind parse_variable_kind(std::string_view text) {
  text = trim(text);
  if (text == "numeric") return VariableKind::numeric;
  if (text == "categorical") return VariableKind::categorical;
  if (text == "binary") return VariableKind::binary;
  throw InvalidArgument(fmt::format("unknown variable kind '{}'", text));
}

std::optional<std::size_t> VariableSpec::category_index(std::string_view label) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == label) return i;
  return std::nullopt;
}

void VariableSpec::validate() const {
  if (name.empty()) throw InvalidArgument("variable with empty name");
  switch (kind) {
    case VariableKind::numeric:
      if (!categories.empty())
        throw InvalidArgument(fmt::format("numeric variable '{}' lists categories", name));
      if (numeric_range && !(numeric_range->min < numeric_range->max))
        throw InvalidArgument(fmt::format("variable '{}': range min must be < max", name));
      break;
    case VariableKind::categorical:
      if (categories.size() < 2)
        throw InvalidArgument(fmt::format("categorical variable '{}' needs >= 2 categories", name));
      break;
    case VariableKind::binary:
      if (categories.size() != 2)
        throw InvalidArgument(fmt::format("binary variable '{}' needs exactly 2 categories", name));
      break;
  }
  if (is_discrete()) {
    std::set<std::string> seen(categories.begin(), categories.end());
    if (seen.size() != categories.size())
      throw InvalidArgument(fmt::format("variable '{}' has duplicate categories", name));
    if (category_values.size() != categories.size())
      throw InvalidArgument(fmt::format("variable '{}': {} category values for {} categories", name,
                                        category_values.size(), categories.size()));
  }
}

CohortSchema::CohortSchema(std::vector<VariableSpec> variables, std::size_t series_length)
    : variables_(std::move(variables)), series_length_(series_length) {
  if (series_length_ == 0) throw InvalidArgument("series_length must be positive");
  std::set<std::string> names;
  for (auto& v : variables_) {
    if (v.is_discrete() && v.category_values.empty()) {
      // Labels that parse as numbers keep their value, others their index.
      for (std::size_t i = 0; i < v.categories.size(); ++i) {
        try {
          v.category_values.push_back(parse_double(v.categories[i]));
        } catch (const InvalidArgument&) {
          v.category_values.push_back(static_cast<double>(i));
        }
      }
    }
    v.validate();
    if (!names.insert(v.name).second)
      throw InvalidArgument(fmt::format("duplicate variable name '{}'", v.name));
  }
}

std::optional<std::size_t> CohortSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return i;
  return std::nullopt;
}

std::size_t CohortSchema::count(VariableKind kind) const {
  return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(),
                                                [kind](const auto& v) { return v.kind == kind; }));
}

std::uint64_t CohortSchema::hash() const { return fnv1a(serialize()); }

std::string CohortSchema::serialize() const {
  std::string out = fmt::format("series_length = {}\n", series_length_);
  auto join = [](const auto& items, auto&& fn) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ',';
      s += fn(items[i]);
    }
    return s;
  };
  for (const auto& v : variables_) {
    out += fmt::format("variable.{}.kind = {}\n", v.name, to_string(v.kind));
    if (!v.unit.empty()) out += fmt::format("variable.{}.unit = {}\n", v.name, v.unit);
    if (v.numeric_range)
      out += fmt::format("variable.{}.range = {},{}\n", v.name, format_double(v.numeric_range->min),
                         format_double(v.numeric_range->max));
    if (v.is_discrete()) {
      out += fmt::format("variable.{}.categories = {}\n", v.name,
                         join(v.categories, [](const std::string& s) { return s; }));
      out += fmt::format("variable.{}.values = {}\n", v.name,
                         join(v.category_values, [](double d) { return format_double(d); }));
    }
  }
  return out;
}

CohortSchema CohortSchema::parse(std::string_view text) {
  std::size_t series_length = 0;
  std::vector<VariableSpec> vars;
  auto find_or_add = [&vars](const std::string& name) -> VariableSpec& {
    for (auto& v : vars)
      if (v.name == name) return v;
    vars.push_back(VariableSpec{});
    vars.back().name = name;
    return vars.back();
  };
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "series_length") {
      const auto n = parse_int(value);
      if (n <= 0) throw InvalidArgument("series_length must be positive");
      series_length = static_cast<std::size_t>(n);
      continue;
    }
    constexpr std::string_view prefix = "variable.";
    const auto dot = key.rfind('.');
    if (key.rfind(prefix, 0) != 0 || dot == std::string::npos || dot <= prefix.size())
      throw InvalidArgument(fmt::format("unknown schema key '{}'", key));
    const auto name = key.substr(prefix.size(), dot - prefix.size());
    const auto field = key.substr(dot + 1);
    auto& spec = find_or_add(name);
    if (field == "kind") {
      spec.kind = parse_variable_kind(value);
    } else if (field == "unit") {
      spec.unit = value;
    } else if (field == "range") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw InvalidArgument(fmt::format("'{}' expects min,max", key));
      spec.numeric_range = NumericRange{parse_double(parts[0]), parse_double(parts[1])};
    } else if (field == "categories") {
      spec.categories.clear();
      for (const auto& c : split(value, ',')) spec.categories.emplace_back(trim(c));
    } else if (field == "values") {
      spec.category_values.clear();
      for (const auto& c : split(value, ',')) spec.category_values.push_back(parse_double(c));
    } else {
      throw InvalidArgument(fmt::format("unknown variable field '{}'", key));
    }
  }
  if (series_length == 0) throw InvalidArgument("schema is missing series_length");
  return CohortSchema(std::move(vars), series_length);
}

CohortSchema CohortSchema::load(const std::filesystem::path& path) { return parse(read_file(path)); }

namespace {

VariableSpec numeric(std::string name, std::string unit, double lo, double hi) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::numeric;
  v.unit = std::move(unit);
  v.numeric_range = NumericRange{lo, hi};
  return v;
}

VariableSpec categorical(std::string name, std::string unit, std::vector<std::string> labels,
                         std::vector<double> values) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::categorical;
  v.unit = std::move(unit);
  v.categories = std::move(labels);
  v.category_values = std::move(values);
  return v;
}

VariableSpec flag(std::string name) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::binary;
  v.unit = "-";
  v.categories = {"0", "1"};
  v.category_values = {0.0, 1.0};
  return v;
}

}  // namespace

CohortSchema reference_schema() {
  std::vector<std::string> gcs_labels;
  std::vector<double> gcs_values;
  for (int score = 3; score <= 15; ++score) {
    gcs_labels.push_back(std::to_string(score));
    gcs_values.push_back(score);
  }
  std::vector<VariableSpec> vars{
      numeric("MAP", "mmHg", 20, 200),
      numeric("DiastolicBP", "mmHg", 10, 180),
      numeric("SystolicBP", "mmHg", 30, 300),
      categorical("FluidBoluses", "mL", {"0-250", "250-500", "500-1000", "1000+"},
                  {125, 375, 750, 1000}),
      numeric("Urine", "mL", 0, 5000),
      categorical("Vasopressors", "mcg/kg/min", {"0", "0-8.4", "8.4-20.28", "20.28+"},
                  {0, 4.2, 14.34, 20.28}),
      numeric("ALT", "IU/L", 0, 10000),
      numeric("AST", "IU/L", 0, 10000),
      categorical("FiO2", "fraction",
                  {"le0.2", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1.0"},
                  {0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}),
      categorical("GCS", "point", gcs_labels, gcs_values),
      numeric("PaO2", "mmHg", 10, 700),
      numeric("LacticAcid", "mmol/L", 0, 30),
      numeric("SerumCreatinine", "mg/dL", 0, 25),
      flag("Urine_M"),
      flag("ALT_AST_M"),
      flag("FiO2_M"),
      flag("GCS_M"),
      flag("PaO2_M"),
      flag("LacticAcid_M"),
      flag("SerumCreatinine_M"),
  };
  return CohortSchema(std::move(vars), 48);
}

}  // namespace seqaug
