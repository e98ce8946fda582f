#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "seqaug/schema.hpp"

namespace seqaug {

/// Static class label used as the conditioning mask: 1 marks the minority.
class ConditionLabel {
 public:
  constexpr ConditionLabel() = default;
  explicit ConditionLabel(int value);

  static ConditionLabel majority() { return ConditionLabel(0); }
  static ConditionLabel minority() { return ConditionLabel(1); }

  int value() const { return value_; }
  bool is_minority() const { return value_ == 1; }
  friend bool operator==(ConditionLabel, ConditionLabel) = default;

 private:
  int value_ = 0;
};

/// One patient: a series_length x |variables| matrix. Numeric cells hold
/// the measured value; discrete cells hold the category index.
struct PatientSeries {
  std::string patient_id;
  ConditionLabel label;
  Eigen::MatrixXd observations;
};

class Cohort {
 public:
  Cohort() = default;
  /// Validates every cell against the schema (DomainViolation / RaggedSeries).
  Cohort(CohortSchema schema, std::vector<PatientSeries> patients);

  const CohortSchema& schema() const { return schema_; }
  const std::vector<PatientSeries>& patients() const { return patients_; }
  const PatientSeries& patient(std::size_t i) const { return patients_.at(i); }
  std::size_t size() const { return patients_.size(); }
  bool empty() const { return patients_.empty(); }

  std::size_t count(ConditionLabel label) const;
  std::size_t majority_count() const { return count(ConditionLabel::majority()); }
  std::size_t minority_count() const { return count(ConditionLabel::minority()); }

  Cohort with_label(ConditionLabel label) const;
  /// Pooled column of variable `v` over every patient and timestep.
  std::vector<double> pooled_column(std::size_t v) const;

 private:
  CohortSchema schema_;
  std::vector<PatientSeries> patients_;
};

bool cell_in_domain(const VariableSpec& spec, double value);
/// Throws DomainViolation when `value` is outside the domain of `spec`.
void check_cell(const VariableSpec& spec, double value, std::string_view where);

Cohort parse_cohort_csv(std::string_view text, const CohortSchema& schema);
Cohort load_cohort(const std::filesystem::path& path, const CohortSchema& schema);

/// `patient_id,hour,label,<variables...>`; one row per patient-hour.
std::string cohort_to_csv(const Cohort& cohort);
void write_cohort(const std::filesystem::path& path, const Cohort& cohort);

/// Concatenation in argument order; schemas must match.
Cohort concat(const Cohort& a, const Cohort& b);

struct HoldoutSplit {
  Cohort train;
  Cohort test;
};

/// Puts `n_minority_holdout` minority patients, drawn without replacement
/// under `seed`, into the test split. Relative order is preserved in both.
HoldoutSplit holdout_split(const Cohort& cohort, std::size_t n_minority_holdout, std::uint64_t seed);

/// N - M: how many minority samples balance the cohort. Throws
/// ClassInversion when the minority outnumbers the majority.
std::size_t deficit(const Cohort& cohort);

}  // namespace seqaug
