// Copyright 2026 The hgt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "hgt/checkpoint.hpp"
#include "hgt/error.hpp"

namespace hgt::cli {

namespace {

std::vector<double> parse_weights(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("bad level weight '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw IOError("cannot write '" + p.string() + "'");
  return f;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create '" + dir.string() + "': " + ec.message());
}

std::filesystem::path checkpoint_path(const RunConfig& rc) {
  return rc.checkpoint.empty() ? rc.out / "model.hgck" : rc.checkpoint;
}

const std::vector<ImageFeatures>& eval_split(const Dataset& data) {
  return data.test.empty() ? data.train : data.test;
}

}  // namespace

TrainConfig train_config(const RunConfig& rc, std::size_t levels) {
  TrainConfig cfg = TrainConfig::defaults(levels);
  cfg.lr0 = rc.lr;
  cfg.epochs = rc.epochs;
  cfg.batch_size = rc.batch;
  cfg.seed = rc.seed;
  cfg.threads = rc.threads;
  cfg.lambda1 = rc.lambda1;
  cfg.lambda2 = rc.lambda2;
  cfg.alpha = rc.alpha;
  cfg.toggles = Toggles::parse(rc.toggles);
  cfg.visual_prompt_rows = rc.visual_prompts;
  for (EncoderInit* e : {&cfg.text_encoder, &cfg.visual_encoder}) {
    e->variant = parse_variant(rc.variant);
    e->depth = rc.depth;
    e->activation = parse_activation(rc.activation);
  }
  cfg.loss.strategy = parse_strategy(rc.strategy);
  cfg.loss.logit_scale = rc.logit_scale;
  if (!rc.level_weights.empty()) {
    cfg.loss.level_weights = parse_weights(rc.level_weights);
    if (cfg.loss.level_weights.size() != levels) {
      throw ConfigError("--level-weights has " + std::to_string(cfg.loss.level_weights.size()) +
                        " entries for a " + std::to_string(levels) + "-level hierarchy");
    }
  }
  cfg.validate(levels);
  return cfg;
}

std::string config_text(const RunConfig& rc) {
  std::ostringstream s;
  auto str = [&](const char* k, const std::string& v) {
    if (!v.empty()) s << k << " = \"" << v << "\"\n";
  };
  str("taxonomy", rc.taxonomy.string());
  str("embeddings", rc.embeddings.string());
  str("checkpoint", rc.checkpoint.string());
  str("out", rc.out.string());
  s << "seed = " << rc.seed << '\n'
    << "threads = " << rc.threads << '\n'
    << "lr = " << num(rc.lr) << '\n'
    << "epochs = " << rc.epochs << '\n'
    << "batch = " << rc.batch << '\n'
    << "lambda1 = " << num(rc.lambda1) << '\n'
    << "lambda2 = " << num(rc.lambda2) << '\n';
  if (rc.alpha) s << "alpha = " << num(*rc.alpha) << '\n';
  s << "depth = " << rc.depth << '\n';
  str("variant", rc.variant);
  str("activation", rc.activation);
  str("strategy", rc.strategy);
  s << "toggles = \"" << rc.toggles << "\"\n";
  str("level-weights", rc.level_weights);
  s << "logit-scale = " << num(rc.logit_scale) << '\n'
    << "visual-prompts = " << rc.visual_prompts << '\n'
    << "branching = \"" << join(rc.synth.branching) << "\"\n"
    << "dim = " << rc.synth.dim << '\n'
    << "train-per-leaf = " << rc.synth.train_per_leaf << '\n'
    << "test-per-leaf = " << rc.synth.test_per_leaf << '\n'
    << "patches = " << rc.synth.patches << '\n'
    << "sigma = " << num(rc.synth.sigma) << '\n'
    << "offset = " << num(rc.synth.offset) << '\n'
    << "text-noise = " << num(rc.synth.text_noise) << '\n'
    << "coarse-text-noise = " << num(rc.synth.coarse_text_noise) << '\n';
  return s.str();
}

Dataset load_data(const RunConfig& rc) {
  if (rc.embeddings.empty()) {
    SynthSpec spec = rc.synth;
    spec.seed = rc.seed;
    Dataset data = synthesize(spec);
    if (!rc.taxonomy.empty()) {
      data.taxonomy = load_taxonomy(rc.taxonomy.string());
      data.graph = build_graph(data.taxonomy);
      data.validate();
    }
    return data;
  }
  if (!std::filesystem::is_directory(rc.embeddings)) {
    throw IOError("embedding directory '" + rc.embeddings.string() + "' does not exist");
  }
  return read_dataset(rc.taxonomy, rc.embeddings);
}

int cmd_synth(const RunConfig& rc, std::ostream& out) {
  SynthSpec spec = rc.synth;
  spec.seed = rc.seed;
  const Dataset data = synthesize(spec);
  write_dataset(rc.out, data);
  out << "wrote " << data.graph.node_count() << " nodes, " << data.train.size() << " train and "
      << data.test.size() << " test images to " << rc.out.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_data(rc);
  const TrainConfig cfg = train_config(rc, data.graph.levels());
  ensure_dir(rc.out);

  std::ofstream log = open_out(rc.out / "train_log.csv");
  log << "epoch,lr,loss,wall_time_s\n";
  const auto start = std::chrono::steady_clock::now();
  const FitResult fitted = fit(data, cfg, [&](const EpochMetrics& m) {
    log << m.epoch + 1 << ',' << num(m.lr) << ',' << num(m.loss) << ',' << std::fixed
        << std::setprecision(3) << m.wall_time_s << std::defaultfloat << '\n';
    out << "epoch " << m.epoch + 1 << "/" << cfg.epochs << "  loss " << m.loss << '\n';
  });
  save_checkpoint(checkpoint_path(rc), fitted.state);

  SweepRow row;
  row.setting = "toggles=" + cfg.toggles.bits();
  row.result = evaluate(fitted.state, data, eval_split(data), cfg);
  row.seed = cfg.seed;
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream csv = open_out(rc.out / "eval.csv");
  write_csv(csv, {row});
  open_out(rc.out / "run.cfg") << config_text(rc);

  std::ostringstream summary;
  summary << "hierarchy: " << data.graph.levels() << " levels, " << data.graph.node_count()
          << " nodes, D=" << data.width() << '\n'
          << "train images: " << data.train.size() << ", eval images: " << row.result.n_samples
          << '\n'
          << "toggles: " << cfg.toggles.to_string() << ", encoder: " << rc.variant << " depth "
          << rc.depth << ", strategy: " << rc.strategy << '\n'
          << "epochs: " << cfg.epochs << ", final loss: "
          << (fitted.log.empty() ? 0.0 : fitted.log.back().loss) << '\n'
          << "checkpoint: " << checkpoint_path(rc).string() << "\n\n"
          << format_table({row});
  open_out(rc.out / "summary.txt") << summary.str();
  out << summary.str();
  return 0;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
  if (rc.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
  const Dataset data = load_data(rc);
  const TrainConfig cfg = train_config(rc, data.graph.levels());
  ModelState state = init_state(data, cfg);
  load_checkpoint(rc.checkpoint, state);

  const auto start = std::chrono::steady_clock::now();
  SweepRow row;
  row.setting = "toggles=" + cfg.toggles.bits();
  row.result = evaluate(state, data, eval_split(data), cfg);
  row.seed = cfg.seed;
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ensure_dir(rc.out);
  std::ofstream csv = open_out(rc.out / "eval.csv");
  write_csv(csv, {row});
  out << format_table({row});
  return 0;
}

int cmd_sweep(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_data(rc);
  const TrainConfig cfg = train_config(rc, data.graph.levels());
  const std::vector<SweepRow> rows = sweep(rc.axis, cfg, data);
  ensure_dir(rc.out);
  std::ofstream csv = open_out(rc.out / "sweep.csv");
  write_csv(csv, rows);
  const std::string table = format_table(rows);
  open_out(rc.out / "sweep.txt") << table;
  out << table;
  return 0;
}

int cmd_gradcheck(const RunConfig& rc, std::ostream& out) {
  const Dataset data = load_data(rc);
  const TrainConfig cfg = train_config(rc, data.graph.levels());
  ModelState state = init_state(data, cfg);
  if (!rc.checkpoint.empty()) load_checkpoint(rc.checkpoint, state);
  const std::size_t n = std::min(rc.gradcheck_samples, data.train.size());
  GradcheckOptions opts;
  opts.threshold = rc.gradcheck_threshold;
  const GradcheckReport report =
      gradcheck(state, data, std::span(data.train).first(n), cfg, opts);
  out << std::left << std::setw(28) << "block" << std::right << std::setw(14) << "max_rel_err"
      << std::setw(14) << "max_abs_grad" << "  status\n";
  for (const GradcheckBlock& b : report.blocks) {
    out << std::left << std::setw(28) << b.name << std::right << std::scientific
        << std::setprecision(3) << std::setw(14) << b.max_rel_error << std::setw(14)
        << b.max_abs_analytic << std::defaultfloat << "  " << (b.flagged ? "FLAGGED" : "ok")
        << '\n';
  }
  if (report.blocks.empty()) out << "(no trainable blocks in this configuration)\n";
  return report.ok() ? 0 : 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  rc.threads = std::max(1u, std::thread::hardware_concurrency());

  CLI::App app{"Hierarchy-graph prompt tuning for multi-level classification", "hgt"};
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.set_config("--config", "", "Read options from a `key = value` file");
  app.require_subcommand(1);

  std::string taxonomy, embeddings, checkpoint, out_dir = rc.out.string();
  app.add_option("--taxonomy", taxonomy, "Taxonomy file (defaults to <embeddings>/taxonomy.tsv)");
  app.add_option("--embeddings", embeddings,
                 "Directory with text.hgeb, train.hgeb and test.hgeb (synthetic data if omitted)");
  app.add_option("--checkpoint", checkpoint, "Checkpoint path (train default: <out>/model.hgck)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", rc.seed, "Random seed");
  app.add_option("--threads", rc.threads, "Worker threads")
      ->envname("HGT_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_option("--lr", rc.lr, "Initial learning rate");
  app.add_option("--epochs", rc.epochs, "Training epochs");
  app.add_option("--batch", rc.batch, "Batch size");
  app.add_option("--lambda1", rc.lambda1, "Weight of the prompted global branch");
  app.add_option("--lambda2", rc.lambda2, "Weight of the fused prototype branch");
  double alpha = 0.0;
  auto* alpha_opt =
      app.add_option("--alpha", alpha, "Fusion temperature")->default_str("1/sqrt(D)");
  app.add_option("--depth", rc.depth, "Graph encoder layers")->check(CLI::PositiveNumber);
  app.add_option("--variant", rc.variant, "Graph encoder")
      ->check(CLI::IsMember({"gcn", "gat", "sage"}));
  app.add_option("--activation", rc.activation, "Layer activation: identity, relu or leaky_relu[:slope]");
  app.add_option("--strategy", rc.strategy, "Probability strategy")
      ->check(CLI::IsMember({"multi_label", "marginalization"}));
  app.add_option("--toggles", rc.toggles, "Enabled stages out of TP,TG,VP,VG, or none");
  app.add_option("--level-weights", rc.level_weights, "Per-level loss weights w1,...,wh")
      ->default_str("1,...,1,2");
  app.add_option("--logit-scale", rc.logit_scale, "Scale applied to scores inside the loss");
  app.add_option("--visual-prompts", rc.visual_prompts, "Learned rows appended to feature maps");

  std::string branching = join(rc.synth.branching);
  app.add_option("--branching", branching, "Synthetic level-1 count, then children per node");
  app.add_option("--dim", rc.synth.dim, "Synthetic embedding width");
  app.add_option("--train-per-leaf", rc.synth.train_per_leaf, "Synthetic train images per leaf");
  app.add_option("--test-per-leaf", rc.synth.test_per_leaf, "Synthetic test images per leaf");
  app.add_option("--patches", rc.synth.patches, "Synthetic spatial rows per image");
  app.add_option("--sigma", rc.synth.sigma, "Synthetic intra-class noise");
  app.add_option("--offset", rc.synth.offset, "Synthetic child-mean offset scale");
  app.add_option("--text-noise", rc.synth.text_noise, "Synthetic leaf text noise");
  app.add_option("--coarse-text-noise", rc.synth.coarse_text_noise,
                 "Synthetic text noise above the leaf level");

  app.add_subcommand("synth", "Write a synthetic dataset to --out")->fallthrough();
  app.add_subcommand("train", "Train and write checkpoint, logs and metrics to --out")
      ->fallthrough();
  app.add_subcommand("eval", "Evaluate --checkpoint on the test split")->fallthrough();
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one model per setting of an axis");
  sweep_cmd->fallthrough();
  std::string axis = "depth";
  sweep_cmd->add_option("--axis", axis, "Sweep axis")
      ->check(CLI::IsMember({"depth", "variant", "toggles"}));
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad_cmd->fallthrough();
  grad_cmd->add_option("--samples", rc.gradcheck_samples, "Training samples in the check");
  grad_cmd->add_option("--threshold", rc.gradcheck_threshold, "Relative error that flags a block");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    rc.taxonomy = taxonomy;
    rc.embeddings = embeddings;
    rc.checkpoint = checkpoint;
    rc.out = out_dir;
    if (alpha_opt->count() > 0) rc.alpha = alpha;
    rc.synth.branching.clear();
    std::stringstream ss(branching);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("bad --branching entry '" + item + "'");
      }
      rc.synth.branching.push_back(std::stoul(item));
    }
    rc.axis = parse_axis(axis);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") return cmd_synth(rc, out);
    if (name == "train") return cmd_train(rc, out);
    if (name == "eval") return cmd_eval(rc, out);
    if (name == "sweep") return cmd_sweep(rc, out);
    return cmd_gradcheck(rc, out);
  } catch (const Error& e) {
    err << "hgt: " << describe(e) << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "hgt: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace hgt::cli
