#include "seqaug/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/schema.hpp"

namespace seqaug {

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

class Filler {
 public:
  Filler(const CohortSchema& schema, Eigen::MatrixXd& obs) : schema_(schema), obs_(obs) {}

  void numeric(const char* name, Eigen::Index t, double value) {
    const auto v = col(name);
    const auto& spec = schema_.variable(static_cast<std::size_t>(v));
    if (spec.numeric_range) value = std::clamp(value, spec.numeric_range->min, spec.numeric_range->max);
    obs_(t, v) = round2(value);
  }

  void category(const char* name, Eigen::Index t, double index) {
    const auto v = col(name);
    const auto k = static_cast<double>(schema_.variable(static_cast<std::size_t>(v)).categories.size());
    obs_(t, v) = std::clamp(std::round(index), 0.0, k - 1.0);
  }

 private:
  Eigen::Index col(const char* name) const {
    const auto idx = schema_.index_of(name);
    if (!idx) throw SchemaMismatch(fmt::format("toy cohort: schema lacks '{}'", name));
    return static_cast<Eigen::Index>(*idx);
  }

  const CohortSchema& schema_;
  Eigen::MatrixXd& obs_;
};

PatientSeries make_patient(const CohortSchema& schema, int label, std::string id,
                           const ToyParameters& p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto steps = static_cast<Eigen::Index>(schema.series_length());
  PatientSeries s;
  s.patient_id = std::move(id);
  s.label = ConditionLabel(label);
  s.observations = Eigen::MatrixXd::Zero(steps, static_cast<Eigen::Index>(schema.size()));
  Filler fill(schema, s.observations);

  const auto c = static_cast<std::size_t>(label);
  const double severity = normal(rng);
  const double liver = 3.3 + 0.4 * severity + 0.2 * label + 0.3 * normal(rng);
  const double stationary = p.ar_noise / std::sqrt(1.0 - p.ar_coefficient * p.ar_coefficient);
  double ar = stationary * normal(rng);
  double ar_lab = normal(rng);
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (t > 0) {
      ar = p.ar_coefficient * ar + p.ar_noise * normal(rng);
      ar_lab = 0.9 * ar_lab + 0.3 * normal(rng);
    }
    const double wave =
        std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / p.map_period + p.map_phase[c]);
    const double map = p.map_mean[c] + p.severity_effect * severity + p.map_amplitude[c] * wave + ar;
    fill.numeric("MAP", t, map);
    const double dbp = p.diastolic_slope[c] * map + (1.0 - p.diastolic_slope[c]) * 60.0 +
                       1.5 * normal(rng);
    fill.numeric("DiastolicBP", t, dbp);
    fill.numeric("SystolicBP", t, 3.0 * map - 2.0 * dbp + 2.0 * normal(rng));
    fill.numeric("Urine", t, 70.0 - 12.0 * severity + 0.8 * (map - 70.0) + 15.0 * normal(rng));
    fill.numeric("ALT", t, std::exp(liver + 0.1 * ar_lab));
    fill.numeric("AST", t, std::exp(liver + 0.25 + 0.1 * ar_lab + 0.1 * normal(rng)));
    fill.numeric("PaO2", t, 95.0 - 10.0 * severity - 5.0 * label + 6.0 * normal(rng));
    fill.numeric("LacticAcid", t, 1.6 + 0.5 * severity + 0.3 * label + 0.2 * ar_lab + 0.15 * normal(rng));
    fill.numeric("SerumCreatinine", t, 1.1 + 0.3 * severity + 0.15 * label + 0.05 * ar_lab);

    const double low = 68.0 - map;
    fill.category("FluidBoluses", t, 0.6 + 0.12 * low + 0.6 * normal(rng));
    fill.category("Vasopressors", t, 0.3 + 0.15 * low + 0.4 * severity + 0.5 * normal(rng));
    fill.category("FiO2", t, 2.0 + 1.5 * severity + 0.5 * label + 0.7 * normal(rng));
    fill.category("GCS", t, 10.0 - 2.0 * severity - 0.5 * label + 0.8 * normal(rng));

    for (const char* flag : {"Urine_M", "ALT_AST_M", "FiO2_M", "GCS_M", "PaO2_M", "LacticAcid_M",
                             "SerumCreatinine_M"}) {
      const double rate = std::clamp(p.flag_rate[c] + 0.05 * severity, 0.02, 0.98);
      fill.category(flag, t, unit(rng) < rate ? 1.0 : 0.0);
    }
  }
  return s;
}

}  // namespace

Cohort make_toy_cohort(std::size_t n_major, std::size_t n_minor, std::uint64_t seed,
                       const ToyParameters& params) {
  const CohortSchema schema = reference_schema();
  Rng rng = make_rng(seed, "toy");
  std::vector<PatientSeries> patients;
  patients.reserve(n_major + n_minor);
  for (std::size_t i = 0; i < n_major + n_minor; ++i) {
    const int label = i < n_major ? 0 : 1;
    patients.push_back(make_patient(schema, label, fmt::format("t{:05d}", i), params, rng));
  }
  return Cohort(schema, std::move(patients));
}

}  // namespace seqaug
