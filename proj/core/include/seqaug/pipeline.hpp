#pragma once

// Commands behind the `seqaugment` CLI. Each reads the config, consumes
// artifacts written by earlier commands and writes its own outputs under
// `<out.dir>/<config hash>/`, each with a `.manifest` sidecar.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seqaug/cohort.hpp"
#include "seqaug/config.hpp"

namespace seqaug::pipeline {

struct OutputLayout {
  std::filesystem::path root;

  static OutputLayout for_config(const ExperimentConfig& cfg);
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path synthetic() const { return root / "synthetic"; }
  std::filesystem::path metrics() const { return root / "metrics"; }
  std::filesystem::path figures() const { return root / "figures"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path model_stem() const { return checkpoints() / "model"; }
};

/// Writes `contents` to `path` and `path.manifest` (config hash, command,
/// content hash).
void write_artifact(const std::filesystem::path& path, std::string_view contents,
                    const ExperimentConfig& cfg, std::string_view command);

Cohort load_data(const ExperimentConfig& cfg);
HoldoutSplit split_data(const ExperimentConfig& cfg, const Cohort& cohort);

/// `count` synthetic minority patients from the configured method, fitted
/// on `train`. GAN methods load the trained checkpoint.
Cohort synthesize(const ExperimentConfig& cfg, const Cohort& train, std::size_t count);

void cmd_maketoy(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_generate(const ExperimentConfig& cfg);
void cmd_balance(const ExperimentConfig& cfg);
void cmd_evaluate(const ExperimentConfig& cfg);
void cmd_downstream(const ExperimentConfig& cfg);
void cmd_report(const ExperimentConfig& cfg);

const std::vector<std::string>& command_names();
/// Dispatches by name; throws ConfigInvalid for an unknown command.
void run(std::string_view command, const ExperimentConfig& cfg);

}  // namespace seqaug::pipeline
