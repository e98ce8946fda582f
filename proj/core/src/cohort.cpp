#include "seqaug/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug {

ConditionLabel::ConditionLabel(int value) : value_(value) {
  if (value != 0 && value != 1)
    throw DomainViolation(fmt::format("label must be 0 or 1, got {}", value));
}

bool cell_in_domain(const VariableSpec& spec, double value) {
  if (!std::isfinite(value)) return false;
  if (spec.is_discrete())
    return value >= 0 && value < static_cast<double>(spec.categories.size()) &&
           value == std::floor(value);
  if (spec.numeric_range) return value >= spec.numeric_range->min && value <= spec.numeric_range->max;
  return true;
}

void check_cell(const VariableSpec& spec, double value, std::string_view where) {
  if (!std::isfinite(value))
    throw DomainViolation(fmt::format("{}: non-finite value for '{}'", where, spec.name));
  if (spec.is_discrete()) {
    const double k = static_cast<double>(spec.categories.size());
    if (value < 0 || value >= k || value != std::floor(value))
      throw DomainViolation(
          fmt::format("{}: category index {} out of domain for '{}'", where, value, spec.name));
  } else if (spec.numeric_range) {
    if (value < spec.numeric_range->min || value > spec.numeric_range->max)
      throw DomainViolation(fmt::format("{}: value {} of '{}' outside [{}, {}]", where, value,
                                        spec.name, spec.numeric_range->min,
                                        spec.numeric_range->max));
  }
}

Cohort::Cohort(CohortSchema schema, std::vector<PatientSeries> patients)
    : schema_(std::move(schema)), patients_(std::move(patients)) {
  const auto rows = static_cast<Eigen::Index>(schema_.series_length());
  const auto cols = static_cast<Eigen::Index>(schema_.size());
  for (const auto& p : patients_) {
    if (p.observations.rows() != rows)
      throw RaggedSeries(fmt::format("patient '{}' has {} timesteps, expected {}", p.patient_id,
                                     p.observations.rows(), rows));
    if (p.observations.cols() != cols)
      throw SchemaMismatch(fmt::format("patient '{}' has {} variables, expected {}", p.patient_id,
                                       p.observations.cols(), cols));
    for (Eigen::Index v = 0; v < cols; ++v) {
      const auto& spec = schema_.variable(static_cast<std::size_t>(v));
      for (Eigen::Index t = 0; t < rows; ++t)
        if (!cell_in_domain(spec, p.observations(t, v)))
          check_cell(spec, p.observations(t, v),
                     fmt::format("patient '{}' hour {}", p.patient_id, t));
    }
  }
}

std::size_t Cohort::count(ConditionLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      patients_.begin(), patients_.end(), [label](const auto& p) { return p.label == label; }));
}

Cohort Cohort::with_label(ConditionLabel label) const {
  std::vector<PatientSeries> out;
  for (const auto& p : patients_)
    if (p.label == label) out.push_back(p);
  return Cohort(schema_, std::move(out));
}

std::vector<double> Cohort::pooled_column(std::size_t v) const {
  std::vector<double> out;
  out.reserve(patients_.size() * schema_.series_length());
  for (const auto& p : patients_)
    for (Eigen::Index t = 0; t < p.observations.rows(); ++t)
      out.push_back(p.observations(t, static_cast<Eigen::Index>(v)));
  return out;
}

Cohort parse_cohort_csv(std::string_view text, const CohortSchema& schema) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = end + 1;
    }
  }
  if (lines.empty()) throw SchemaMismatch("empty file: missing header");

  const auto header = split(lines[0], ',');
  const std::size_t n_vars = schema.size();
  // Column index in the file for patient_id, hour, label and each variable.
  std::vector<long> var_col(n_vars, -1);
  long id_col = -1, hour_col = -1, label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = std::string(trim(header[c]));
    long* slot = nullptr;
    if (name == "patient_id") {
      slot = &id_col;
    } else if (name == "hour") {
      slot = &hour_col;
    } else if (name == "label") {
      slot = &label_col;
    } else if (auto idx = schema.index_of(name)) {
      slot = &var_col[*idx];
    } else {
      throw SchemaMismatch(fmt::format("unexpected column '{}'", name));
    }
    if (*slot != -1) throw SchemaMismatch(fmt::format("duplicate column '{}'", name));
    *slot = static_cast<long>(c);
  }
  if (id_col < 0 || hour_col < 0 || label_col < 0)
    throw SchemaMismatch("header must contain patient_id, hour and label");
  for (std::size_t v = 0; v < n_vars; ++v)
    if (var_col[v] < 0)
      throw SchemaMismatch(fmt::format("missing column '{}'", schema.variable(v).name));

  struct Pending {
    ConditionLabel label;
    std::vector<std::pair<long long, Eigen::RowVectorXd>> rows;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> pending;
  const auto T = static_cast<long long>(schema.series_length());

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto fields = split(lines[li], ',');
    const auto row_no = li + 1;
    if (fields.size() != header.size())
      throw SchemaMismatch(
          fmt::format("row {}: {} fields, header has {}", row_no, fields.size(), header.size()));
    const std::string id(trim(fields[id_col]));
    long long hour = 0;
    int label = 0;
    try {
      hour = parse_int(fields[hour_col]);
      label = static_cast<int>(parse_int(fields[label_col]));
    } catch (const InvalidArgument& e) {
      throw DomainViolation(fmt::format("row {}: {}", row_no, e.what()));
    }
    if (label != 0 && label != 1)
      throw DomainViolation(fmt::format("row {} column 'label': {} not in {{0,1}}", row_no, label));
    Eigen::RowVectorXd values(static_cast<Eigen::Index>(n_vars));
    for (std::size_t v = 0; v < n_vars; ++v) {
      const auto& spec = schema.variable(v);
      const auto cell = trim(fields[var_col[v]]);
      auto where = [&] { return fmt::format("row {} column '{}'", row_no, spec.name); };
      double value = 0.0;
      if (spec.is_discrete()) {
        const auto idx = spec.category_index(cell);
        if (!idx) throw DomainViolation(fmt::format("{}: '{}' is not a category", where(), cell));
        value = static_cast<double>(*idx);
      } else {
        try {
          value = parse_double(cell);
        } catch (const InvalidArgument&) {
          throw DomainViolation(fmt::format("{}: '{}' is not a number", where(), cell));
        }
      }
      if (!cell_in_domain(spec, value)) check_cell(spec, value, where());
      values(static_cast<Eigen::Index>(v)) = value;
    }
    auto [it, inserted] = pending.try_emplace(id, Pending{ConditionLabel(label), {}});
    if (inserted) order.push_back(id);
    if (it->second.label.value() != label)
      throw DomainViolation(fmt::format("row {}: patient '{}' changes label", row_no, id));
    it->second.rows.emplace_back(hour, std::move(values));
  }

  std::vector<PatientSeries> patients;
  patients.reserve(order.size());
  for (const auto& id : order) {
    auto& p = pending.at(id);
    if (static_cast<long long>(p.rows.size()) != T)
      throw RaggedSeries(
          fmt::format("patient '{}' has {} rows, expected {}", id, p.rows.size(), T));
    std::sort(p.rows.begin(), p.rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Eigen::MatrixXd obs(T, static_cast<Eigen::Index>(n_vars));
    for (long long t = 0; t < T; ++t) {
      if (p.rows[t].first != t)
        throw RaggedSeries(fmt::format("patient '{}': hours must be 0..{} exactly once", id, T - 1));
      obs.row(t) = p.rows[t].second;
    }
    patients.push_back(PatientSeries{id, p.label, std::move(obs)});
  }
  return Cohort(schema, std::move(patients));
}

Cohort load_cohort(const std::filesystem::path& path, const CohortSchema& schema) {
  return parse_cohort_csv(read_file(path), schema);
}

std::string cohort_to_csv(const Cohort& cohort) {
  const auto& schema = cohort.schema();
  std::string out = "patient_id,hour,label";
  for (const auto& v : schema.variables()) {
    out += ',';
    out += v.name;
  }
  out += '\n';
  for (const auto& p : cohort.patients()) {
    for (Eigen::Index t = 0; t < p.observations.rows(); ++t) {
      out += fmt::format("{},{},{}", p.patient_id, t, p.label.value());
      for (std::size_t v = 0; v < schema.size(); ++v) {
        const auto& spec = schema.variable(v);
        const double value = p.observations(t, static_cast<Eigen::Index>(v));
        out += ',';
        if (spec.is_discrete())
          out += spec.categories[static_cast<std::size_t>(value)];
        else
          out += format_double(value);
      }
      out += '\n';
    }
  }
  return out;
}

void write_cohort(const std::filesystem::path& path, const Cohort& cohort) {
  write_file(path, cohort_to_csv(cohort));
}

Cohort concat(const Cohort& a, const Cohort& b) {
  if (a.schema().hash() != b.schema().hash())
    throw SchemaMismatch("cannot concatenate cohorts with different schemas");
  auto patients = a.patients();
  patients.insert(patients.end(), b.patients().begin(), b.patients().end());
  return Cohort(a.schema(), std::move(patients));
}

HoldoutSplit holdout_split(const Cohort& cohort, std::size_t n_minority_holdout,
                           std::uint64_t seed) {
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    if (cohort.patient(i).label.is_minority()) minority.push_back(i);
  if (n_minority_holdout > minority.size())
    throw InvalidArgument(fmt::format("cannot hold out {} minority patients, only {} present",
                                      n_minority_holdout, minority.size()));
  Rng rng(seed);
  std::shuffle(minority.begin(), minority.end(), rng);
  std::vector<bool> in_test(cohort.size(), false);
  for (std::size_t i = 0; i < n_minority_holdout; ++i) in_test[minority[i]] = true;

  std::vector<PatientSeries> train, test;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    (in_test[i] ? test : train).push_back(cohort.patient(i));
  return HoldoutSplit{Cohort(cohort.schema(), std::move(train)),
                      Cohort(cohort.schema(), std::move(test))};
}

std::size_t deficit(const Cohort& cohort) {
  const auto n = cohort.majority_count();
  const auto m = cohort.minority_count();
  if (n < m)
    throw ClassInversion(fmt::format(
        "minority class ({}) outnumbers majority ({}); labels are probably inverted", m, n));
  return n - m;
}

}  // namespace seqaug
