#include "seqaug/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "seqaug/downstream.hpp"
#include "seqaug/errors.hpp"
#include "seqaug/gan.hpp"
#include "seqaug/metrics.hpp"
#include "seqaug/plots.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/smote.hpp"
#include "seqaug/toy.hpp"

namespace seqaug::pipeline {

namespace fs = std::filesystem;

namespace {

std::uint64_t seed_for(const ExperimentConfig& cfg, std::string_view stream) {
  return substream_seed(cfg.seed, stream);
}

Cohort require_cohort(const fs::path& path, const CohortSchema& schema, std::string_view producer) {
  if (!fs::exists(path))
    throw MissingArtifact(fmt::format("'{}' not found; run `{}` first", path.string(), producer));
  return load_cohort(path, schema);
}

Cohort renumber(const Cohort& c) {
  std::vector<PatientSeries> patients = c.patients();
  for (std::size_t i = 0; i < patients.size(); ++i) patients[i].patient_id = fmt::format("syn-{:06d}", i);
  return Cohort(c.schema(), std::move(patients));
}

Cohort smote_cohort(const ExperimentConfig& cfg, const Cohort& train, std::size_t count) {
  auto enc = std::make_shared<const Encoding>(Encoding::fit(train, cfg.train.embed_dim, cfg.train.seed));
  const auto minority = flatten(encode(train.with_label(ConditionLabel::minority()), enc));
  const auto result = smote_generate(minority, static_cast<std::size_t>(cfg.smote_k), count,
                                     seed_for(cfg, "smote"));
  const auto batch = unflatten(result.samples,
                               static_cast<Eigen::Index>(train.schema().series_length()), enc,
                               ConditionLabel::minority());
  return renumber(decode(batch, train.schema()));
}

std::string markdown_table(const std::string& csv) {
  std::string out;
  bool first = true;
  std::size_t cols = 0;
  for (const auto& line_raw : split(csv, '\n')) {
    const auto line = std::string(trim(line_raw));
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    out += "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
    if (first) {
      cols = cells.size();
      out += "|";
      for (std::size_t i = 0; i < cols; ++i) out += "---|";
      out += "\n";
      first = false;
    }
  }
  return out;
}

}  // namespace

OutputLayout OutputLayout::for_config(const ExperimentConfig& cfg) {
  return OutputLayout{cfg.resolve(cfg.out_dir) / cfg.hash()};
}

void write_artifact(const fs::path& path, std::string_view contents, const ExperimentConfig& cfg,
                    std::string_view command) {
  write_file(path, contents);
  auto manifest = path;
  manifest += ".manifest";
  write_file(manifest, fmt::format("config_hash = {}\ncommand = {}\nartifact = {}\ncontent_fnv1a = {:016x}\n",
                                   cfg.hash(), command, path.filename().string(), fnv1a(contents)));
}

Cohort load_data(const ExperimentConfig& cfg) {
  return require_cohort(cfg.resolve(cfg.data_path), cfg.schema(), "maketoy");
}

HoldoutSplit split_data(const ExperimentConfig& cfg, const Cohort& cohort) {
  return holdout_split(cohort, cfg.holdout_minority, seed_for(cfg, "split"));
}

Cohort synthesize(const ExperimentConfig& cfg, const Cohort& train, std::size_t count) {
  if (count == 0) return Cohort(train.schema(), {});
  if (cfg.method == Method::smote) return smote_cohort(cfg, train, count);
  const auto layout = OutputLayout::for_config(cfg);
  auto manifest = layout.model_stem();
  manifest += ".manifest";
  if (!fs::exists(manifest))
    throw MissingArtifact(fmt::format("no trained model at '{}'; run `train` first",
                                      layout.model_stem().string()));
  const auto bundle = gan::ModelBundle::load(layout.model_stem(), train.schema());
  return gan::generate_minority(bundle, count, seed_for(cfg, "generate"));
}

void cmd_maketoy(const ExperimentConfig& cfg) {
  const Cohort toy = make_toy_cohort(cfg.toy_major, cfg.toy_minor, cfg.seed);
  const auto path = cfg.resolve(cfg.data_path);
  write_artifact(path, cohort_to_csv(toy), cfg, "maketoy");
  spdlog::info("wrote toy cohort ({} majority, {} minority) to {}", cfg.toy_major, cfg.toy_minor,
               path.string());
}

void cmd_train(const ExperimentConfig& cfg) {
  const auto layout = OutputLayout::for_config(cfg);
  const auto split = split_data(cfg, load_data(cfg));
  if (cfg.method == Method::smote) {
    spdlog::info("smote has no trainable state; nothing to do");
    return;
  }
  // The baseline is unconditional and sees only minority patients.
  const Cohort input = cfg.method == Method::wgangp_star
                           ? split.train.with_label(ConditionLabel::minority())
                           : split.train;
  downstream::assert_no_leakage(split.test, {&input});
  auto tc = cfg.train;
  tc.checkpoint_dir = layout.checkpoints();
  const auto result = gan::train(input, tc, [](const gan::TraceRow& r) {
    if (r.probe_mmd)
      spdlog::info("step {}: L_D {:.4f} L_G {:.4f} probe MMD {:.5f}", r.step, r.loss_d, r.loss_g,
                   *r.probe_mmd);
  });
  result.bundle->save(layout.model_stem());
  write_artifact(layout.checkpoints() / "trace.csv", result.trace.to_csv(), cfg, "train");
  spdlog::info("saved model after {} steps to {}", result.bundle->steps(), layout.model_stem().string());
}

void cmd_generate(const ExperimentConfig& cfg) {
  const auto layout = OutputLayout::for_config(cfg);
  const auto split = split_data(cfg, load_data(cfg));
  const std::size_t count = cfg.generate_count ? *cfg.generate_count : deficit(split.train);
  const Cohort syn = synthesize(cfg, split.train, count);
  write_artifact(layout.synthetic() / "synthetic.csv", cohort_to_csv(syn), cfg, "generate");
  spdlog::info("generated {} synthetic minority patients", syn.size());
}

void cmd_balance(const ExperimentConfig& cfg) {
  const auto layout = OutputLayout::for_config(cfg);
  const auto split = split_data(cfg, load_data(cfg));
  const Cohort syn = synthesize(cfg, split.train, deficit(split.train));
  const Cohort augmented = concat(split.train, syn);
  write_artifact(layout.synthetic() / "augmented.csv", cohort_to_csv(augmented), cfg, "balance");
  spdlog::info("augmented cohort: {} majority, {} minority", augmented.majority_count(),
               augmented.minority_count());
}

void cmd_evaluate(const ExperimentConfig& cfg) {
  const auto layout = OutputLayout::for_config(cfg);
  const auto schema = cfg.schema();
  Cohort real;
  if (!cfg.evaluate_real.empty()) {
    real = require_cohort(cfg.resolve(cfg.evaluate_real), schema, "maketoy");
  } else {
    real = split_data(cfg, load_data(cfg)).train.with_label(ConditionLabel::minority());
  }
  const Cohort syn = cfg.evaluate_synthetic.empty()
                         ? require_cohort(layout.synthetic() / "synthetic.csv", schema, "generate")
                         : require_cohort(cfg.resolve(cfg.evaluate_synthetic), schema, "generate");
  const Encoding enc = Encoding::fit(real, cfg.train.embed_dim, seed_for(cfg, "metrics-encoding"));
  const auto report = metrics::fidelity_report(real, syn, enc, cfg.metrics);

  std::vector<std::string> names;
  for (const auto& v : schema.variables()) names.push_back(v.name);
  write_artifact(layout.metrics() / "fidelity.csv", metrics::fidelity_csv(report), cfg, "evaluate");
  write_artifact(layout.metrics() / "summary.csv", metrics::summary_csv(report), cfg, "evaluate");
  write_artifact(layout.metrics() / "kendall_real.csv", metrics::matrix_csv(report.kendall_real, names),
                 cfg, "evaluate");
  write_artifact(layout.metrics() / "kendall_synthetic.csv",
                 metrics::matrix_csv(report.kendall_syn, names), cfg, "evaluate");
  write_artifact(layout.figures() / "kendall_real.svg",
                 plots::heatmap_svg("Kendall tau, real", report.kendall_real, names), cfg, "evaluate");
  write_artifact(layout.figures() / "kendall_synthetic.svg",
                 plots::heatmap_svg("Kendall tau, synthetic", report.kendall_syn, names), cfg,
                 "evaluate");
  if (report.projection) {
    write_artifact(layout.metrics() / "projection_pca.csv", metrics::projection_csv(*report.projection),
                   cfg, "evaluate");
    write_artifact(layout.figures() / "projection_pca.svg",
                   plots::scatter_svg("Real vs synthetic", *report.projection), cfg, "evaluate");
  }
  for (std::size_t v = 0; v < schema.size(); ++v)
    write_artifact(layout.figures() / fmt::format("distribution_{}.svg", names[v]),
                   plots::distribution_svg(schema.variable(v), real.pooled_column(v), syn.pooled_column(v)),
                   cfg, "evaluate");
  spdlog::info("median KL {:.5f}, median MMD {:.5f}, min distance {:.4f}", report.kl_median,
               report.mmd_median, report.authenticity.min_distance);
}

void cmd_downstream(const ExperimentConfig& cfg) {
  const auto layout = OutputLayout::for_config(cfg);
  const auto split = split_data(cfg, load_data(cfg));
  const Cohort syn = synthesize(cfg, split.train, deficit(split.train));
  const Cohort augmented = concat(split.train, syn);
  downstream::assert_no_leakage(split.test, {&split.train, &syn, &augmented});

  auto enc = std::make_shared<const Encoding>(
      Encoding::fit(split.train, cfg.train.embed_dim, seed_for(cfg, "downstream-encoding")));
  downstream::RegressionReport report;
  for (auto v : downstream::target_variables(split.train.schema()))
    report.variables.push_back(split.train.schema().variable(v).name);
  const std::vector<std::pair<std::string, const Cohort*>> regimes = {
      {"real", &split.train}, {"synthetic", &syn}, {"augmented", &augmented}};
  for (const auto& [name, cohort] : regimes) {
    if (cohort->empty()) throw InvalidArgument(fmt::format("downstream: the {} regime is empty", name));
    const auto windows = downstream::make_windows(*cohort, *enc, cfg.window_in, cfg.window_out);
    const auto bundle = downstream::train_regressor(windows, enc, cfg.regressor, cfg.window_in, cfg.window_out);
    report.add(name, downstream::evaluate_regressor(bundle, split.test));
    spdlog::info("{} regime: median relative error {:.3f}%", name, report.medians.back());
  }
  write_artifact(layout.metrics() / "downstream.csv", report.to_csv(), cfg, "downstream");
}

void cmd_report(const ExperimentConfig& cfg) {
  const auto layout = OutputLayout::for_config(cfg);
  const auto fidelity = layout.metrics() / "fidelity.csv";
  if (!fs::exists(fidelity))
    throw MissingArtifact(fmt::format("'{}' not found; run `evaluate` first", fidelity.string()));
  std::string md = fmt::format("# Experiment {}\n\nMethod: `{}`, seed {}.\n\n", cfg.hash(),
                               to_string(cfg.method), cfg.seed);
  md += "## Fidelity per variable\n\n" + markdown_table(read_file(fidelity)) + "\n";
  const auto summary = layout.metrics() / "summary.csv";
  if (fs::exists(summary)) md += "## Summary\n\n" + markdown_table(read_file(summary)) + "\n";
  const auto down = layout.metrics() / "downstream.csv";
  if (fs::exists(down))
    md += "## Downstream mean relative error (%)\n\n" + markdown_table(read_file(down)) + "\n";
  else
    md += "## Downstream\n\nNot run (`downstream`).\n\n";
  md += "## Figures\n\n";
  if (fs::exists(layout.figures() / "projection_pca.svg"))
    md += "![PCA projection](../figures/projection_pca.svg)\n\n";
  md += "![Kendall real](../figures/kendall_real.svg)\n![Kendall synthetic](../figures/kendall_synthetic.svg)\n\n";
  const auto schema = cfg.schema();
  for (const auto& v : schema.variables())
    md += fmt::format("![{0}](../figures/distribution_{0}.svg)\n", v.name);
  md += "\nt-SNE and UMAP projections need an external backend and are not included.\n";
  write_artifact(layout.reports() / "report.md", md, cfg, "report");
  spdlog::info("wrote {}", (layout.reports() / "report.md").string());
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"maketoy", "train",      "generate", "balance",
                                                 "evaluate", "downstream", "report"};
  return names;
}

void run(std::string_view command, const ExperimentConfig& cfg) {
  if (command == "maketoy") return cmd_maketoy(cfg);
  if (command == "train") return cmd_train(cfg);
  if (command == "generate") return cmd_generate(cfg);
  if (command == "balance") return cmd_balance(cfg);
  if (command == "evaluate") return cmd_evaluate(cfg);
  if (command == "downstream") return cmd_downstream(cfg);
  if (command == "report") return cmd_report(cfg);
  throw ConfigInvalid(fmt::format("unknown command '{}'", command));
}

}  // namespace seqaug::pipeline
