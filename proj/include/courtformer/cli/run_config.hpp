#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "courtformer/config.hpp"
#include "courtformer/data/sequence.hpp"
#include "courtformer/data/synthetic.hpp"
#include "courtformer/harness/train.hpp"
#include "courtformer/model/config.hpp"

namespace courtformer::cli {

// Everything one command needs, resolved from a settings file, `--set`
// overrides and the seed. Keys: `seed`, `out_dir`, `data.*`, `synth.*`,
// `model.*`, `train.*` and `bench.*`; anything else is rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "run";
  std::filesystem::path data_dir = "data";
  std::size_t val_sequences = 200;
  std::size_t test_sequences = 400;
  data::SyntheticLeagueConfig synth;
  model::ModelConfig model = model::ModelConfig::desk();
  harness::TrainConfig train = harness::TrainConfig::desk();
  std::size_t bench_epochs = 1;
  std::size_t bench_samples = 100;

  // Seed precedence: `seed_flag`, then the `seed` key, then the
  // COURTFORMER_SEED environment variable, then 0. The seed is the default
  // for synth.seed, model.init_seed, train.seed and the game split.
  static RunConfig resolve(const Settings& settings, std::optional<std::uint64_t> seed_flag = std::nullopt);

  // Every key with its effective value; resolve(resolved()) reproduces this
  // configuration.
  Settings resolved() const;
};

// Settings from an optional file followed by `key=value` overrides.
Settings gather_settings(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

struct LoadedGames {
  std::vector<data::GameRecord> games;
  std::vector<std::string> warnings;
};

// Every `*.game` file in `dir`, in file-name order.
LoadedGames load_games(const std::filesystem::path& dir);

// The game split and the evaluation sets built from it, reproducible from
// the config alone.
struct PreparedData {
  data::GameSplit split;
  std::vector<data::PlaySequence> validation;
  std::vector<data::PlaySequence> test;
  std::vector<std::string> warnings;
};

PreparedData prepare_data(const RunConfig& config);

}  // namespace courtformer::cli
