#include "seqaug/config.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"

namespace seqaug {

namespace {

template <typename F>
auto typed(const std::string& key, const std::string& value, F parse) {
  try {
    return parse(value);
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid(fmt::format("{}: {}", key, e.what()));
  }
}

long long as_int(const std::string& key, const std::string& v) {
  return typed(key, v, [](const std::string& s) { return parse_int(s); });
}
double as_double(const std::string& key, const std::string& v) {
  return typed(key, v, [](const std::string& s) { return parse_double(s); });
}
bool as_bool(const std::string& key, const std::string& v) {
  return typed(key, v, [](const std::string& s) { return parse_bool(s); });
}
std::size_t as_count(const std::string& key, const std::string& v) {
  const auto n = as_int(key, v);
  if (n < 0) throw ConfigInvalid(fmt::format("{} must be >= 0", key));
  return static_cast<std::size_t>(n);
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::cagan: return "cagan";
    case Method::wgangp_star: return "wgangp_star";
    case Method::smote: return "smote";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "cagan") return Method::cagan;
  if (text == "wgangp_star") return Method::wgangp_star;
  if (text == "smote") return Method::smote;
  throw ConfigInvalid(fmt::format("method: expected cagan, wgangp_star or smote, got '{}'", text));
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

CohortSchema ExperimentConfig::schema() const {
  if (schema_path.empty()) return reference_schema();
  return CohortSchema::load(resolve(schema_path));
}

KeyValues ExperimentConfig::canonical() const {
  KeyValues kv = {
      {"seed", std::to_string(seed)},
      {"method", std::string(to_string(method))},
      {"data.path", data_path.generic_string()},
      {"data.schema", schema_path.generic_string()},
      {"holdout.n_minority", std::to_string(holdout_minority)},
      {"smote.k", std::to_string(smote_k)},
      {"generate.count", generate_count ? std::to_string(*generate_count) : "deficit"},
      {"toy.n_major", std::to_string(toy_major)},
      {"toy.n_minor", std::to_string(toy_minor)},
      {"metrics.kl_bins", std::to_string(metrics.kl_bins)},
      {"metrics.kl_epsilon", format_double(metrics.kl_epsilon)},
      {"metrics.mmd_sigma", format_double(metrics.mmd_sigma)},
      {"metrics.sequence_mmd_sigma", format_double(metrics.sequence_mmd_sigma)},
      {"metrics.mmd_max_points", std::to_string(metrics.mmd_max_points)},
      {"metrics.projection", metrics.projection ? "true" : "false"},
      {"downstream.hidden_size", std::to_string(regressor.hidden_size)},
      {"downstream.epochs", std::to_string(regressor.epochs)},
      {"downstream.batch_size", std::to_string(regressor.batch_size)},
      {"downstream.lr", format_double(regressor.lr)},
      {"downstream.windows_per_epoch", std::to_string(regressor.windows_per_epoch)},
      {"downstream.window_in", std::to_string(window_in)},
      {"downstream.window_out", std::to_string(window_out)},
      {"evaluate.real_path", evaluate_real.generic_string()},
      {"evaluate.synthetic_path", evaluate_synthetic.generic_string()},
  };
  for (auto& [k, v] : train.to_key_values())
    if (k != "train.seed") kv.emplace_back(k, v);
  std::sort(kv.begin(), kv.end());
  return kv;
}

std::string ExperimentConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : canonical()) text += k + "=" + v + "\n";
  return fmt::format("{:016x}", fnv1a(text));
}

ExperimentConfig parse_config(const KeyValues& kv, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  bool seed_set = false;
  KeyValues train_kv;
  for (const auto& [key, v] : kv) {
    if (key == "seed") {
      const auto s = as_int(key, v);
      if (s < 0) throw ConfigInvalid("seed must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
      seed_set = true;
    } else if (key == "method") {
      c.method = parse_method(v);
    } else if (key == "data.path") {
      c.data_path = v;
    } else if (key == "data.schema") {
      c.schema_path = v;
    } else if (key == "out.dir") {
      c.out_dir = v;
    } else if (key == "holdout.n_minority") {
      c.holdout_minority = as_count(key, v);
    } else if (key == "smote.k") {
      c.smote_k = static_cast<int>(as_count(key, v));
    } else if (key == "generate.count") {
      if (v == "deficit") c.generate_count.reset();
      else c.generate_count = as_count(key, v);
    } else if (key == "toy.n_major") {
      c.toy_major = as_count(key, v);
    } else if (key == "toy.n_minor") {
      c.toy_minor = as_count(key, v);
    } else if (key == "metrics.kl_bins") {
      c.metrics.kl_bins = static_cast<int>(as_int(key, v));
    } else if (key == "metrics.kl_epsilon") {
      c.metrics.kl_epsilon = as_double(key, v);
    } else if (key == "metrics.mmd_sigma") {
      c.metrics.mmd_sigma = as_double(key, v);
    } else if (key == "metrics.sequence_mmd_sigma") {
      c.metrics.sequence_mmd_sigma = as_double(key, v);
    } else if (key == "metrics.mmd_max_points") {
      c.metrics.mmd_max_points = as_count(key, v);
    } else if (key == "metrics.projection") {
      c.metrics.projection = as_bool(key, v);
    } else if (key == "downstream.hidden_size") {
      c.regressor.hidden_size = static_cast<int>(as_int(key, v));
    } else if (key == "downstream.epochs") {
      c.regressor.epochs = static_cast<int>(as_int(key, v));
    } else if (key == "downstream.batch_size") {
      c.regressor.batch_size = static_cast<int>(as_int(key, v));
    } else if (key == "downstream.lr") {
      c.regressor.lr = as_double(key, v);
    } else if (key == "downstream.windows_per_epoch") {
      c.regressor.windows_per_epoch = static_cast<int>(as_int(key, v));
    } else if (key == "downstream.window_in") {
      c.window_in = static_cast<int>(as_int(key, v));
    } else if (key == "downstream.window_out") {
      c.window_out = static_cast<int>(as_int(key, v));
    } else if (key == "evaluate.real_path") {
      c.evaluate_real = v;
    } else if (key == "evaluate.synthetic_path") {
      c.evaluate_synthetic = v;
    } else if (key == "train.seed") {
      throw ConfigInvalid("train.seed is derived from the top-level seed; set `seed` instead");
    } else if (key == "train.conditional") {
      throw ConfigInvalid("train.conditional follows from `method`; set that instead");
    } else if (key.rfind("train.", 0) == 0) {
      train_kv.emplace_back(key, v);
    } else {
      throw ConfigInvalid(fmt::format("unknown key '{}'", key));
    }
  }
  if (!seed_set) throw ConfigInvalid("seed is mandatory");
  c.train = gan::TrainingConfig::from_key_values(train_kv, c.train);
  c.train.conditional = c.method != Method::wgangp_star;
  c.train.seed = substream_seed(c.seed, "train");
  c.metrics.seed = substream_seed(c.seed, "metrics");
  c.regressor.seed = substream_seed(c.seed, "downstream");
  c.train.validate();
  if (c.smote_k < 1) throw ConfigInvalid("smote.k must be >= 1");
  if (c.metrics.kl_bins < 1) throw ConfigInvalid("metrics.kl_bins must be >= 1");
  if (!(c.metrics.kl_epsilon > 0.0)) throw ConfigInvalid("metrics.kl_epsilon must be > 0");
  if (!(c.metrics.mmd_sigma > 0.0)) throw ConfigInvalid("metrics.mmd_sigma must be > 0");
  if (c.metrics.sequence_mmd_sigma < 0.0)
    throw ConfigInvalid("metrics.sequence_mmd_sigma must be >= 0 (0 = median heuristic)");
  if (c.metrics.mmd_max_points < 2) throw ConfigInvalid("metrics.mmd_max_points must be >= 2");
  if (c.window_in < 1 || c.window_out < 1) throw ConfigInvalid("downstream windows must be >= 1");
  if (c.data_path.empty()) throw ConfigInvalid("data.path is required");
  if (!c.schema_path.empty() && !std::filesystem::exists(c.resolve(c.schema_path)))
    throw ConfigInvalid(fmt::format("data.schema '{}' does not exist", c.schema_path.string()));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides) {
  if (!std::filesystem::exists(path))
    throw ConfigInvalid(fmt::format("config file '{}' does not exist", path.string()));
  KeyValues kv;
  try {
    kv = parse_key_values(read_file(path));
  } catch (const InvalidArgument& e) {
    throw ConfigInvalid(fmt::format("{}: {}", path.string(), e.what()));
  }
  kv.insert(kv.end(), overrides.begin(), overrides.end());
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(kv, base);
}

}  // namespace seqaug
