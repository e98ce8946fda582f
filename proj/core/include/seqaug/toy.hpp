#pragma once

// Synthetic stand-in for the restricted hypotension cohort: the reference
// schema filled by a class-dependent generative process with per-patient
// severity, daily oscillation and AR(1) noise.

#include <array>
#include <cstddef>
#include <cstdint>

#include "seqaug/cohort.hpp"

namespace seqaug {

/// Construction parameters, indexed by class (0 majority, 1 minority).
struct ToyParameters {
  std::array<double, 2> map_mean{72.0, 65.0};
  std::array<double, 2> map_amplitude{6.0, 4.0};
  std::array<double, 2> map_phase{0.0, 1.5707963267948966};
  double map_period = 24.0;
  double severity_effect = 4.0;
  double ar_coefficient = 0.7;
  double ar_noise = 2.0;
  /// Diastolic slope on MAP; differs per class so correlations carry signal.
  std::array<double, 2> diastolic_slope{0.8, 0.65};
  std::array<double, 2> flag_rate{0.35, 0.55};
};

/// `n_major` majority patients (ids t00000...) followed by `n_minor`
/// minority patients, on the reference schema.
Cohort make_toy_cohort(std::size_t n_major, std::size_t n_minor, std::uint64_t seed,
                       const ToyParameters& params = {});

}  // namespace seqaug
