#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "seqaug/downstream.hpp"
#include "seqaug/gan.hpp"
#include "seqaug/metrics.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug {

enum class Method { cagan, wgangp_star, smote };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

/// Everything one experiment run needs. Parsed from a flat `key = value`
/// file; `--set` overrides are applied on top.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  Method method = Method::cagan;

  std::filesystem::path data_path;
  /// Empty selects the built-in reference schema.
  std::filesystem::path schema_path;
  std::filesystem::path out_dir = "out";

  std::size_t holdout_minority = 12;
  int smote_k = 5;
  /// Defaults to the training-split deficit.
  std::optional<std::size_t> generate_count;

  std::size_t toy_major = 400;
  std::size_t toy_minor = 80;

  gan::TrainingConfig train;
  metrics::MetricsConfig metrics;
  downstream::RegressorConfig regressor;
  int window_in = 20;
  int window_out = 1;

  /// Overrides for `evaluate`: compare these files instead of the
  /// training minority and the generated cohort.
  std::filesystem::path evaluate_real;
  std::filesystem::path evaluate_synthetic;

  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir;
  std::filesystem::path resolve(const std::filesystem::path& p) const;

  /// Canonical typed key/values, sorted, excluding out.dir.
  KeyValues canonical() const;
  /// 16 hex digits of FNV-1a over `canonical()`.
  std::string hash() const;
  CohortSchema schema() const;
};

/// Applies `kv` (file entries followed by overrides; later entries win).
/// Relative paths resolve against `base_dir`. Component seeds are derived
/// from `seed`. Throws ConfigInvalid.
ExperimentConfig parse_config(const KeyValues& kv, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});

}  // namespace seqaug
