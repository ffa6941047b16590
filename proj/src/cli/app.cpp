#include "courtformer/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "courtformer/cli/run_config.hpp"
#include "courtformer/errors.hpp"
#include "courtformer/harness/metrics.hpp"
#include "courtformer/model/checkpoint.hpp"
#include "courtformer/model/entity_transformer.hpp"

namespace courtformer::cli {

namespace fs = std::filesystem;

namespace {

// Options every subcommand accepts.
struct CommonOptions {
  std::optional<std::string> config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "Settings file of key = value lines");
    app->add_option("--set", overrides, "Override one setting, key=value (repeatable)");
    app->add_option("--seed", seed, "Master seed (falls back to COURTFORMER_SEED)");
    app->add_option("--out", out_dir, "Output directory");
  }

  RunConfig resolve() const {
    std::optional<fs::path> file;
    if (config_file) file = *config_file;
    auto settings = gather_settings(file, overrides);
    if (out_dir) settings.set("out_dir", *out_dir);
    return RunConfig::resolve(settings, seed);
  }
};

// Where an analysis command finds its sequence.
struct SequenceOptions {
  std::string split = "test";
  std::size_t index = 0;

  void attach(CLI::App* app) {
    app->add_option("--split", split, "Evaluation split: val or test")->check(CLI::IsMember({"val", "test"}));
    app->add_option("--sequence", index, "Index into the split's evaluation set");
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& text) {
  ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

// Echoes a CSV to stdout and stores it with the resolved config beside it.
void emit(const RunConfig& config, const std::string& name, const std::string& csv, std::ostream& out) {
  out << csv;
  write_file(config.out_dir / (name + ".csv"), csv);
  write_file(config.out_dir / (name + "_config.txt"), config.resolved().to_text());
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

fs::path checkpoint_path(const RunConfig& config, const std::optional<std::string>& flag) {
  return flag ? fs::path(*flag) : config.out_dir / "model.ckpt";
}

std::unique_ptr<model::SequenceModel<float>> open_checkpoint(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("checkpoint " + path.string() + " does not exist");
  return model::load_checkpoint(path);
}

const data::PlaySequence& pick_sequence(const PreparedData& data, const SequenceOptions& opts) {
  const auto& set = opts.split == "val" ? data.validation : data.test;
  if (opts.index >= set.size()) {
    throw IndexError("sequence " + std::to_string(opts.index) + " outside the " + opts.split + " set of " +
                     std::to_string(set.size()) + " sequences");
  }
  return set[opts.index];
}

// ---- commands --------------------------------------------------------------

int cmd_synth(const CommonOptions& common, std::ostream& out, std::ostream& err) {
  auto config = common.resolve();
  // --out names the game directory here; the config calls it data.dir.
  if (common.out_dir) config.data_dir = *common.out_dir;
  ensure_dir(config.data_dir);
  if (config.synth.games == 0) err << "warning: synth.games is 0, no games written\n";
  const auto games = data::generate_synthetic_league(config.synth);
  std::size_t frames = 0;
  for (const auto& g : games) {
    data::write_game_file(config.data_dir / (g.game_id + ".game"), g);
    frames += g.frames.size();
  }
  write_file(config.data_dir / "synth_config.txt", config.resolved().to_text());
  out << "games," << games.size() << "\nframes," << frames << "\nagents," << config.synth.league_size << '\n';
  return kExitOk;
}

int cmd_ingest_check(const std::vector<std::string>& paths, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".game") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(p);
    }
  }
  int status = kExitOk;
  out << "file,frames,players,warnings\n";
  for (const auto& f : files) {
    try {
      const auto r = data::ingest_game(f);
      out << f.string() << ',' << r.game.frames.size() << ',' << r.game.roster.size() << ',' << r.warnings.size()
          << '\n';
      for (const auto& w : r.warnings) err << f.string() << ": " << w << '\n';
    } catch (const DataError& e) {
      err << "error: " << e.what() << '\n';
      status = kExitData;
    }
  }
  return status;
}

int cmd_train(const CommonOptions& common, std::ostream& out, std::ostream& err) {
  const auto config = common.resolve();
  const auto data = prepare_data(config);
  print_warnings(data.warnings, err);
  ensure_dir(config.out_dir);
  write_file(config.out_dir / "train_config.txt", config.resolved().to_text());

  auto m = model::make_model<float>(config.model);
  err << "training " << model::kind_name(config.model.kind) << " with " << m->count_parameters()
      << " parameters on " << data.split.train.size() << " games\n";
  std::ostringstream csv;
  harness::write_epoch_csv_header(csv);
  const auto result = harness::train(*m, data.split.train, data.validation, config.train,
                                     [&](const harness::EpochRecord& r) {
                                       harness::write_epoch_csv_row(csv, r);
                                       write_file(config.out_dir / "metrics.csv", csv.str());
                                       err << "epoch " << r.epoch << " train " << r.train_nll << " val "
                                           << r.val_nll << " lr " << r.learning_rate << '\n';
                                     });
  model::save_checkpoint(config.out_dir / "model.ckpt", *m);
  out << "best_epoch," << result.best_epoch << "\nbest_val_nll," << format_double(result.best_val_nll) << '\n';
  return kExitOk;
}

struct EvalFlags {
  std::optional<std::string> checkpoint;
  std::string split = "test";
  std::optional<std::string> task;
  bool single_frame = false;
  bool swap_players = false;
};

int cmd_eval(const CommonOptions& common, const EvalFlags& flags, std::ostream& out, std::ostream& err) {
  if (flags.single_frame && flags.swap_players) throw UsageError("choose at most one of --single-frame and --swap-players");
  auto config = common.resolve();
  const auto m = open_checkpoint(checkpoint_path(config, flags.checkpoint));
  config.model = m->config();
  const auto data = prepare_data(config);
  print_warnings(data.warnings, err);
  const auto& set = flags.split == "val" ? data.validation : data.test;
  const std::span<const data::PlaySequence> view(set);

  model::Task task = m->config().task;
  if (flags.task) task = model::parse_task(*flags.task);

  harness::Metrics metrics;
  std::string mode = "full";
  if (flags.single_frame) {
    mode = "single-frame";
    metrics = harness::single_frame_eval(*m, view, task);
  } else if (flags.swap_players) {
    mode = "swap-players";
    data::Rng rng(config.seed);
    metrics = harness::random_player_swap_eval(*m, view, task, rng);
  } else {
    metrics = harness::evaluate(*m, view, task);
  }
  std::ostringstream csv;
  csv << "split,mode,task,sequences,predictions,nll,pp\n"
      << flags.split << ',' << mode << ',' << model::task_name(task) << ',' << metrics.sequences << ','
      << metrics.predictions << ',' << format_double(metrics.mean_nll) << ',' << format_double(metrics.perplexity)
      << '\n';
  emit(config, "eval", csv.str(), out);
  return kExitOk;
}

int cmd_ablate(const CommonOptions& common, const std::string& only, std::ostream& out, std::ostream& err) {
  const auto config = common.resolve();
  const auto data = prepare_data(config);
  print_warnings(data.warnings, err);
  harness::AblationOptions options;
  options.task_p = only != "B";
  options.task_b = only != "P";
  const auto report = harness::run_ablations(
      data.split.train, data.validation, data.test, config.model, config.train, options,
      [&](const std::string& arm, const harness::EpochRecord& r) {
        err << arm << " epoch " << r.epoch << " val " << r.val_nll << '\n';
      });
  std::ostringstream csv;
  report.write_csv(csv);
  emit(config, "ablation", csv.str(), out);
  return kExitOk;
}

int cmd_bench(const CommonOptions& common, std::ostream& out, std::ostream& err) {
  const auto config = common.resolve();
  const auto data = prepare_data(config);
  print_warnings(data.warnings, err);
  auto tc = config.model;
  tc.kind = model::ModelKind::Transformer;
  tc.task = model::Task::P;
  auto gc = tc;
  gc.kind = model::ModelKind::Grnn;
  auto t = model::make_model<float>(tc);
  auto g = model::make_model<float>(gc);
  const auto r = harness::speed_benchmark(*t, *g, data.split.train, config.bench_samples, config.bench_epochs,
                                          config.seed, config.train.learning_rate);
  std::ostringstream csv;
  csv << "model,parameters,seconds_per_epoch\n"
      << "transformer," << r.transformer_parameters << ',' << format_double(r.transformer_seconds) << '\n'
      << "grnn," << r.grnn_parameters << ',' << format_double(r.grnn_seconds) << '\n';
  emit(config, "bench", csv.str(), out);
  return kExitOk;
}

struct EmbeddingFlags {
  std::optional<std::string> checkpoint;
  std::optional<std::int32_t> query;
  std::size_t k = 5;
};

int cmd_embeddings(const CommonOptions& common, const EmbeddingFlags& flags, std::ostream& out) {
  auto config = common.resolve();
  const auto m = open_checkpoint(checkpoint_path(config, flags.checkpoint));
  config.model = m->config();
  if (!m->config().identity) {
    throw UsageError("checkpoint was trained without player identity; it has no per-player embeddings");
  }
  const auto& table = m->encoder().table().value;
  const std::size_t dim = table.dim(1);
  const std::size_t players = m->config().league_size;
  auto row = [&](std::size_t id) { return table.data().subspan(id * dim, dim); };

  std::ostringstream csv;
  if (!flags.query) {
    csv << "agent_id";
    for (std::size_t d = 0; d < dim; ++d) csv << ",dim_" << d;
    csv << '\n';
    for (std::size_t id = 0; id < players; ++id) {
      csv << id;
      for (float v : row(id)) csv << ',' << format_double(v);
      csv << '\n';
    }
    emit(config, "embeddings", csv.str(), out);
    return kExitOk;
  }

  const auto q = static_cast<std::size_t>(m->encoder().player_row(*flags.query));
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t id = 0; id < players; ++id) {
    if (id == q) continue;
    double d2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = static_cast<double>(row(id)[d]) - static_cast<double>(row(q)[d]);
      d2 += diff * diff;
    }
    ranked.emplace_back(std::sqrt(d2), id);
  }
  std::sort(ranked.begin(), ranked.end());
  csv << "rank,agent_id,distance\n";
  for (std::size_t i = 0; i < std::min(flags.k, ranked.size()); ++i) {
    csv << i + 1 << ',' << ranked[i].second << ',' << format_double(ranked[i].first) << '\n';
  }
  emit(config, "neighbors", csv.str(), out);
  return kExitOk;
}

struct AttentionFlags {
  std::optional<std::string> checkpoint;
  SequenceOptions sequence;
  std::size_t layer = 0;
  std::size_t head = 0;
  std::size_t ref_step = 0;
  std::optional<std::string> weights_file;
};

int cmd_attention(const CommonOptions& common, const AttentionFlags& flags, std::ostream& out, std::ostream& err) {
  auto config = common.resolve();
  const auto m = open_checkpoint(checkpoint_path(config, flags.checkpoint));
  config.model = m->config();
  const auto* transformer = dynamic_cast<const model::EntityTransformer<float>*>(m.get());
  if (transformer == nullptr) throw UsageError("attention needs a transformer checkpoint");
  const auto data = prepare_data(config);
  print_warnings(data.warnings, err);
  const auto& seq = pick_sequence(data, flags.sequence);
  const auto report = transformer->attention(seq, flags.layer, flags.head, flags.ref_step);

  std::ostringstream csv;
  csv << "agent_slot,temporal_sum\n";
  for (std::size_t k = 0; k < report.temporal_sums.size(); ++k) {
    csv << k << ',' << format_double(report.temporal_sums[k]) << '\n';
  }
  if (flags.weights_file) {
    std::ostringstream w;
    const auto& h = report.heads[flags.head];
    const std::size_t n = h.dim(0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) w << (c ? "," : "") << format_double(h[r * n + c]);
      w << '\n';
    }
    write_file(*flags.weights_file, w.str());
  }
  emit(config, "attention", csv.str(), out);
  return kExitOk;
}

struct TrajFlags {
  std::optional<std::string> checkpoint;
  SequenceOptions sequence;
  std::size_t step = 0;
  std::size_t slot = 0;
  bool no_history = false;
};

int cmd_trajdist(const CommonOptions& common, const TrajFlags& flags, std::ostream& out, std::ostream& err) {
  auto config = common.resolve();
  const auto m = open_checkpoint(checkpoint_path(config, flags.checkpoint));
  config.model = m->config();
  if (!m->config().predicts_players()) throw UsageError("traj-dist needs a checkpoint with the player head");
  const auto data = prepare_data(config);
  print_warnings(data.warnings, err);
  const auto& seq = pick_sequence(data, flags.sequence);
  if (flags.slot == seq.players() && seq.has_ball) {
    throw UsageError("slot " + std::to_string(flags.slot) + " is the ball; trajectory bins are predicted for players");
  }
  if (flags.slot >= seq.players()) {
    throw IndexError("slot " + std::to_string(flags.slot) + " outside the players [0, " +
                     std::to_string(seq.players()) + ")");
  }
  if (flags.step >= seq.steps) {
    throw IndexError("step " + std::to_string(flags.step) + " outside [0, " + std::to_string(seq.steps) + ")");
  }
  const auto input = flags.no_history ? seq.slice(flags.step, 1) : seq.truncated(flags.step + 1);
  const std::size_t row = (input.steps - 1) * input.players() + flags.slot;
  const auto probs = m->probabilities(input, model::Task::P);
  const std::size_t width = probs.dim(1);
  std::ostringstream csv;
  csv << "bin_label,probability\n";
  for (std::size_t b = 0; b < width; ++b) csv << b << ',' << format_double(probs[row * width + b]) << '\n';
  emit(config, "trajdist", csv.str(), out);
  return kExitOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent trajectory modeling: data, training, evaluation and analysis"};
  app.require_subcommand(1);

  CommonOptions common;
  std::function<int()> action;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic league as game files");
  common.attach(synth);
  synth->callback([&] { action = [&] { return cmd_synth(common, out, err); }; });

  std::vector<std::string> ingest_paths;
  auto* ingest = app.add_subcommand("ingest-check", "Parse game files and report dropped frames");
  ingest->add_option("paths", ingest_paths, "Game files or directories")->required();
  ingest->callback([&] { action = [&] { return cmd_ingest_check(ingest_paths, out, err); }; });

  auto* train = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
  common.attach(train);
  train->callback([&] { action = [&] { return cmd_train(common, out, err); }; });

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  common.attach(eval);
  eval->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint file (default <out>/model.ckpt)");
  eval->add_option("--split", eval_flags.split, "val or test")->check(CLI::IsMember({"val", "test"}));
  eval->add_option("--task", eval_flags.task, "P or B (default: the checkpoint's task)");
  eval->add_flag("--single-frame", eval_flags.single_frame, "Score only the first step of each sequence");
  eval->add_flag("--swap-players", eval_flags.swap_players, "Replace players with random league members");
  eval->callback([&] { action = [&] { return cmd_eval(common, eval_flags, out, err); }; });

  std::string only = "all";
  auto* ablate = app.add_subcommand("ablate", "Train and score the identity and context ablation arms");
  common.attach(ablate);
  ablate->add_option("--only", only, "Restrict to task P or task B arms")->check(CLI::IsMember({"all", "P", "B"}));
  ablate->callback([&] { action = [&] { return cmd_ablate(common, only, out, err); }; });

  auto* bench = app.add_subcommand("bench", "Time training epochs of the transformer and the GRNN");
  common.attach(bench);
  bench->callback([&] { action = [&] { return cmd_bench(common, out, err); }; });

  EmbeddingFlags emb_flags;
  auto* emb = app.add_subcommand("embeddings", "Export identity embeddings or nearest neighbors");
  common.attach(emb);
  emb->add_option("--checkpoint", emb_flags.checkpoint, "Checkpoint file (default <out>/model.ckpt)");
  emb->add_option("--query", emb_flags.query, "Agent id whose neighbors to list");
  emb->add_option("--k", emb_flags.k, "Number of neighbors");
  emb->callback([&] { action = [&] { return cmd_embeddings(common, emb_flags, out); }; });

  AttentionFlags att_flags;
  auto* att = app.add_subcommand("attention", "Per-entity attention sums for the ball at one step");
  common.attach(att);
  att->add_option("--checkpoint", att_flags.checkpoint, "Checkpoint file (default <out>/model.ckpt)");
  att_flags.sequence.attach(att);
  att->add_option("--layer", att_flags.layer, "Layer index");
  att->add_option("--head", att_flags.head, "Head index");
  att->add_option("--ref-step", att_flags.ref_step, "Step of the ball token whose row is summed");
  att->add_option("--weights", att_flags.weights_file, "Also write the full weight matrix of the head here");
  att->callback([&] { action = [&] { return cmd_attention(common, att_flags, out, err); }; });

  TrajFlags traj_flags;
  auto* traj = app.add_subcommand("traj-dist", "Predicted trajectory-bin distribution of one player");
  common.attach(traj);
  traj->add_option("--checkpoint", traj_flags.checkpoint, "Checkpoint file (default <out>/model.ckpt)");
  traj_flags.sequence.attach(traj);
  traj->add_option("--step", traj_flags.step, "Step to predict from");
  traj->add_option("--slot", traj_flags.slot, "Player slot");
  traj->add_flag("--no-history", traj_flags.no_history, "Feed only the chosen step, without earlier steps");
  traj->callback([&] { action = [&] { return cmd_trajdist(common, traj_flags, out, err); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!action) return kExitUsage;
  return guarded(action, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, out, err);
}

}  // namespace courtformer::cli
