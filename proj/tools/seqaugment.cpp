// seqaugment <command> --config <file> [--set key=value ...]

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "seqaug/config.hpp"
#include "seqaug/errors.hpp"
#include "seqaug/pipeline.hpp"

namespace {

int exit_code(seqaug::ErrorClass cls) {
  switch (cls) {
    case seqaug::ErrorClass::config: return 2;
    case seqaug::ErrorClass::data: return 3;
    case seqaug::ErrorClass::divergence: return 4;
    case seqaug::ErrorClass::missing_artifact: return 5;
  }
  return 1;
}

seqaug::KeyValues parse_overrides(const std::vector<std::string>& sets) {
  seqaug::KeyValues out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw seqaug::ConfigInvalid(fmt::format("--set expects key=value, got '{}'", s));
    out.emplace_back(std::string(seqaug::trim(s.substr(0, eq))),
                     std::string(seqaug::trim(s.substr(eq + 1))));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minority-class augmentation for clinical time series"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::vector<std::string> sets;
  bool quiet = false;
  for (const auto& name : seqaug::pipeline::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config,-c", config_path, "Experiment config file")->required();
    sub->add_option("--set,-s", sets, "Override a config entry (key=value)");
    sub->add_flag("--quiet,-q", quiet, "Only log warnings and errors");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = seqaug::load_config(config_path, parse_overrides(sets));
    seqaug::pipeline::run(command, cfg);
  } catch (const seqaug::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.category().c_str(), e.what());
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[Internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
