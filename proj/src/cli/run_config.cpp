#include "courtformer/cli/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "courtformer/errors.hpp"

namespace courtformer::cli {

namespace {

std::uint64_t env_seed() {
  const char* text = std::getenv("COURTFORMER_SEED");
  if (text == nullptr || *text == '\0') return 0;
  Settings s;
  s.set("COURTFORMER_SEED", text);
  return s.get_uint("COURTFORMER_SEED", 0);
}

void default_to(Settings& s, const std::string& key, const std::string& value) {
  if (!s.has(key)) s.set(key, value);
}

Settings prefixed(const Settings& s, const std::string& prefix) {
  Settings out;
  for (const auto& [k, v] : s.values()) out.set(prefix + k, v);
  return out;
}

}  // namespace

RunConfig RunConfig::resolve(const Settings& settings, std::optional<std::uint64_t> seed_flag) {
  RunConfig c;
  if (seed_flag) {
    c.seed = *seed_flag;
  } else if (settings.has("seed")) {
    c.seed = settings.get_uint("seed", 0);
  } else {
    c.seed = env_seed();
  }

  std::set<std::string> known{"seed",         "out_dir",       "data.dir", "data.val_sequences", "data.test_sequences",
                              "train.preset", "bench.epochs", "bench.samples"};
  for (const auto& k : model::ModelConfig::keys()) known.insert(k);
  for (const auto& k : harness::TrainConfig::keys()) known.insert(k);
  std::set<std::string> unknown;
  for (const auto& [k, v] : settings.values()) {
    if (k.rfind("synth.", 0) == 0) continue;
    if (known.count(k) == 0) unknown.insert(k);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown setting(s): " + list);
  }

  c.out_dir = settings.get_string("out_dir", c.out_dir.string());
  c.data_dir = settings.get_string("data.dir", c.data_dir.string());
  c.val_sequences = settings.get_uint("data.val_sequences", c.val_sequences);
  c.test_sequences = settings.get_uint("data.test_sequences", c.test_sequences);
  if (c.val_sequences == 0 || c.test_sequences == 0) throw ConfigError("evaluation set sizes must be positive");
  c.bench_epochs = settings.get_uint("bench.epochs", c.bench_epochs);
  c.bench_samples = settings.get_uint("bench.samples", c.bench_samples);
  if (c.bench_epochs == 0 || c.bench_samples == 0) throw ConfigError("bench.epochs and bench.samples must be positive");

  auto synth = settings.with_prefix("synth.");
  default_to(synth, "seed", std::to_string(c.seed));
  c.synth = data::SyntheticLeagueConfig::from_settings(synth);

  Settings rest = settings;
  default_to(rest, "model.init_seed", std::to_string(c.seed));
  default_to(rest, "model.league_size", std::to_string(c.synth.league_size));
  default_to(rest, "train.seed", std::to_string(c.seed));
  c.model = model::ModelConfig::from_settings(rest, model::ModelConfig::desk());

  const std::string preset = settings.get_string("train.preset", "desk");
  harness::TrainConfig base;
  if (preset == "desk") {
    base = harness::TrainConfig::desk();
  } else if (preset == "full") {
    base = harness::TrainConfig::full();
  } else {
    throw ConfigError("train.preset must be desk or full, got '" + preset + "'");
  }
  c.train = harness::TrainConfig::from_settings(rest, base);
  return c;
}

Settings RunConfig::resolved() const {
  Settings s;
  s.set("seed", std::to_string(seed));
  s.set("out_dir", out_dir.string());
  s.set("data.dir", data_dir.string());
  s.set("data.val_sequences", std::to_string(val_sequences));
  s.set("data.test_sequences", std::to_string(test_sequences));
  s.set("bench.epochs", std::to_string(bench_epochs));
  s.set("bench.samples", std::to_string(bench_samples));
  s.merge(prefixed(synth.to_settings(), "synth."));
  s.merge(model.to_settings());
  s.merge(train.to_settings());
  return s;
}

Settings gather_settings(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
  Settings s = file ? Settings::load(file->string()) : Settings{};
  for (const auto& o : overrides) s.assign(o);
  return s;
}

LoadedGames load_games(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("data directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".game") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  LoadedGames out;
  for (const auto& f : files) {
    auto r = data::ingest_game(f);
    for (auto& w : r.warnings) out.warnings.push_back(f.filename().string() + ": " + w);
    out.games.push_back(std::move(r.game));
  }
  return out;
}

PreparedData prepare_data(const RunConfig& config) {
  auto loaded = load_games(config.data_dir);
  if (loaded.games.size() < 3) {
    throw DataError("need at least 3 games in " + config.data_dir.string() + " for a train/validation/test split, found " +
                    std::to_string(loaded.games.size()));
  }
  PreparedData p;
  p.warnings = std::move(loaded.warnings);
  p.split = data::split_games(std::move(loaded.games), config.seed);
  auto val = data::build_eval_set(p.split.validation, config.val_sequences);
  auto test = data::build_eval_set(p.split.test, config.test_sequences);
  p.validation = std::move(val.sequences);
  p.test = std::move(test.sequences);
  for (auto& w : val.warnings) p.warnings.push_back("validation: " + w);
  for (auto& w : test.warnings) p.warnings.push_back("test: " + w);
  if (p.validation.empty() || p.test.empty()) throw DataError("no usable evaluation windows in the held-out games");
  return p;
}

}  // namespace courtformer::cli
