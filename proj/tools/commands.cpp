#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>

#include <CLI11.hpp>

#include "socrec/batch.hpp"
#include "socrec/checkpoint.hpp"
#include "socrec/errors.hpp"
#include "socrec/evaluation.hpp"
#include "socrec/grad_check.hpp"

namespace socrec::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ModelShape model_shape(const RunConfig& cfg, std::size_t item_count) {
  ModelShape shape;
  shape.item_count = item_count;
  shape.d = cfg.d;
  shape.hidden = cfg.hidden;
  shape.variant = cfg.variant;
  shape.use_soc = !cfg.no_soc;
  shape.soc_options.scale_logits = cfg.scale_logits;
  shape.soc_options.literal_self = cfg.literal_self;
  return shape;
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t = cfg.train;
  t.seed = seed;
  return t;
}

struct Experiment {
  Dataset dataset;
  TrainTestSplit split;
  std::vector<UserHistory> histories;
};

Experiment prepare(const RunConfig& cfg, std::ostream& log) {
  Experiment ex;
  const auto path = cfg.data_path();
  if (!std::filesystem::exists(path)) throw ParseError("dataset not found: " + path.string());
  const Dataset raw = load_interactions(path);
  ex.dataset = filter_multilevel(raw, cfg.filter_policy, &log);
  ex.split = split_train_test(ex.dataset, cfg.split_ratio);
  ex.histories = build_histories(ex.split.train);
  log << "data: " << raw.size() << " records, " << ex.dataset.size() << " after "
      << to_string(cfg.filter_policy) << "-filter; train " << ex.split.train.size() << ", test "
      << ex.split.test.size() << "\n";
  return ex;
}

std::optional<Matrix> load_features_if_set(const RunConfig& cfg, const Dataset& ds) {
  if (cfg.features.empty()) return std::nullopt;
  Matrix f = load_item_features(cfg.features, ds);
  if (f.cols() != cfg.d) {
    throw ShapeError("item features are " + std::to_string(f.cols()) + "-dimensional but d=" +
                     std::to_string(cfg.d));
  }
  return f;
}

std::vector<ScoringPair> pairs_of(const Dataset& ds, std::span<const UserHistory> histories) {
  std::vector<ScoringPair> pairs;
  pairs.reserve(ds.size());
  for (const auto& r : ds.records) pairs.push_back({&histories[r.user], r.item});
  return pairs;
}

// Rebuilds the checkpoint's item table in `ds` index order.
ScaaModel align_items(Checkpoint ckpt, const Dataset& ds) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ckpt.item_ids.size(); ++i) row_of.emplace(ckpt.item_ids[i], i);
  Matrix table(ds.item_count(), ckpt.model.dim());
  for (std::size_t i = 0; i < ds.item_count(); ++i) {
    auto it = row_of.find(ds.item_ids()[i]);
    if (it == row_of.end()) {
      throw IndexError("item '" + ds.item_ids()[i] + "' is not in the checkpoint");
    }
    auto src = ckpt.model.items.embeddings.row(it->second);
    std::copy(src.begin(), src.end(), table.row(i).begin());
  }
  ckpt.model.items.embeddings = std::move(table);
  return std::move(ckpt.model);
}

}  // namespace

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  const SyntheticData data = gen_synthetic(sc);
  save_interactions(data.dataset, cfg.out / "interactions.csv");
  save_item_features(data.dataset.item_ids(), data.item_features, cfg.out / "item_features.csv");

  std::size_t clicks = 0, likes = 0, follows = 0;
  for (const auto& r : data.dataset.records) {
    clicks += r.click;
    likes += r.like;
    follows += r.follow;
  }
  const Dataset kept = filter_multilevel(data.dataset, cfg.filter_policy, &log);
  std::vector<char> seen(kept.user_count(), 0);
  for (const auto& r : kept.records) seen[r.user] = 1;
  log << "synth: " << data.dataset.user_count() << " users, " << data.dataset.item_count()
      << " items, " << data.dataset.size() << " records (" << clicks << " clicks, " << likes
      << " likes, " << follows << " follows); "
      << std::count(seen.begin(), seen.end(), 1) << " users pass the "
      << to_string(cfg.filter_policy) << "-filter\n"
      << "wrote " << (cfg.out / "interactions.csv").string() << " and "
      << (cfg.out / "item_features.csv").string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  const Experiment ex = prepare(cfg, log);
  if (ex.split.train.empty()) throw UndefinedMetricError("train: no training records after filtering");
  ScaaModel model = init_model(model_shape(cfg, ex.dataset.item_count()), cfg.seed);
  if (auto f = load_features_if_set(cfg, ex.dataset)) use_external_features(model, std::move(*f));

  const auto examples = exposures(ex.split.train);
  const TrainResult result = train(model, ex.histories, examples, train_config(cfg, cfg.seed));
  save_loss_curve(result, cfg.out / "loss_curve.csv");

  const Checkpoint ckpt{model, ex.dataset.item_ids()};
  save_checkpoint(ckpt, cfg.model_path());

  // The reloaded model must reproduce the in-memory scores exactly.
  const ScaaModel reloaded = align_items(load_checkpoint(cfg.model_path()), ex.dataset);
  const auto pairs = pairs_of(ex.split.test.empty() ? ex.split.train : ex.split.test, ex.histories);
  if (predict_batch(model, pairs) != predict_batch(reloaded, pairs)) {
    throw std::runtime_error("checkpoint round trip changed predictions");
  }

  log << std::setprecision(6) << "train: loss " << result.loss_curve.front() << " -> "
      << result.loss_curve.back() << " over " << cfg.train.epochs << " epochs\n"
      << "wrote " << cfg.model_path().string() << " and "
      << (cfg.out / "loss_curve.csv").string() << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const Experiment ex = prepare(cfg, log);
  const ScaaModel model = align_items(load_checkpoint(cfg.model_path()), ex.dataset);
  const EvalMetrics m = evaluate_all(model, ex.histories, ex.split.test, cfg.eval);
  const std::string label = !model.use_soc ? "ALPINE-surrogate"
                            : model.variant == SocVariant::kFull   ? "SCAA"
                            : model.variant == SocVariant::kCoOnly ? "SCAA_s"
                                                                   : "SCAA_cs";
  const EvalReport report = make_single_report(label, std::string(to_string(model.variant)), m,
                                               cfg.eval.k);
  write_text(cfg.out / "eval_report.json", format_json(report));
  write_text(cfg.out / "eval_report.txt", format_table(report));
  log << format_table(report) << "wrote " << (cfg.out / "eval_report.json").string() << "\n";
  return kOk;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.seeds < 1) throw ConfigError("--seeds must be at least 1");
  const auto started = std::chrono::steady_clock::now();
  std::optional<Dataset> fixed;
  std::optional<Matrix> fixed_features;
  if (!cfg.data.empty()) {
    if (!std::filesystem::exists(cfg.data)) throw ParseError("dataset not found: " + cfg.data.string());
    fixed = filter_multilevel(load_interactions(cfg.data), cfg.filter_policy, &log);
    fixed_features = load_features_if_set(cfg, *fixed);
  }

  std::vector<AblationResult> runs;
  for (std::size_t i = 0; i < cfg.seeds; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    Dataset ds;
    std::optional<Matrix> features;
    if (fixed) {
      ds = *fixed;
      features = fixed_features;
    } else {
      SynthConfig sc = cfg.synth;
      sc.seed = seed;
      SyntheticData data = gen_synthetic(sc);
      if (sc.d_latent != cfg.d) {
        throw ConfigError("synthetic d_latent (" + std::to_string(sc.d_latent) +
                          ") must equal model d (" + std::to_string(cfg.d) + ")");
      }
      ds = filter_multilevel(data.dataset, cfg.filter_policy, &log);
      features = std::move(data.item_features);
    }
    AblationConfig ac;
    ac.shape = model_shape(cfg, ds.item_count());
    ac.train = train_config(cfg, seed);
    ac.eval = cfg.eval;
    ac.split_ratio = cfg.split_ratio;
    runs.push_back(run_ablation(ds, features, ac));
    log << "seed " << seed << ": AUC";
    for (std::size_t a = 0; a < 4; ++a) {
      log << " " << ablation_arms()[a].key << "=" << std::fixed << std::setprecision(4)
          << runs.back().arms[a].metrics.auc;
    }
    log << std::defaultfloat << "\n";
  }

  const EvalReport report = make_ablation_report(runs, cfg.eval.k);
  write_text(cfg.out / "ablation_report.json", format_json(report));
  write_text(cfg.out / "ablation_report.txt", format_table(report));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log << "\n" << format_table(report) << "wrote " << (cfg.out / "ablation_report.json").string()
      << " (" << std::fixed << std::setprecision(1) << seconds << " s)\n" << std::defaultfloat;
  return kOk;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& log) {
  const std::size_t d = cfg.gc_d, m = cfg.gc_m, n = cfg.gc_n;
  if (d < 1 || cfg.gc_hidden < 1 || cfg.gc_trials < 1) {
    throw ConfigError("gradcheck: d, hidden and trials must be at least 1");
  }
  // Items: m liked, n followed, 2 extra clicks, 3 candidates.
  const std::size_t clicks = 2, candidates = 3;
  const std::size_t item_count = m + n + clicks + candidates;

  double worst = 0.0;
  double worst_abs = 0.0;
  std::string worst_name;
  for (std::size_t trial = 0; trial < cfg.gc_trials; ++trial) {
    const std::uint64_t seed = cfg.seed + trial;
    ModelShape shape;
    shape.item_count = item_count;
    shape.d = d;
    shape.hidden = cfg.gc_hidden;
    shape.variant = cfg.variant;
    shape.use_soc = !cfg.no_soc;
    shape.soc_options.scale_logits = cfg.scale_logits;
    shape.soc_options.literal_self = cfg.literal_self;
    const ScaaModel model = init_model(shape, seed);

    UserHistory h;
    for (std::size_t i = 0; i < m; ++i) h.liked.push_back(i);
    for (std::size_t i = 0; i < n; ++i) h.followed.push_back(m + i);
    for (std::size_t i = 0; i < m + n + clicks; ++i) h.clicked.push_back(i);
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < candidates; ++i) cand.push_back(m + n + clicks + i);
    std::mt19937_64 rng(seed);
    std::vector<double> labels;
    for (std::size_t i = 0; i < candidates; ++i) labels.push_back(static_cast<double>(rng() & 1));

    // Parameters: 12 SoC matrices, w1, b1, w2, b2, then one row per item.
    std::vector<Matrix> params;
    std::vector<std::string> names(soc_matrix_names().begin(), soc_matrix_names().end());
    model.soc.for_each([&](const Matrix& w) { params.push_back(w); });
    for (const Matrix* p : {&model.head.w1, &model.head.b1, &model.head.w2, &model.head.b2}) {
      params.push_back(*p);
    }
    names.insert(names.end(), {"head.w1", "head.b1", "head.w2", "head.b2"});
    for (std::size_t i = 0; i < item_count; ++i) {
      params.push_back(Matrix::row_vector(model.items.embeddings.row(i)));
      names.push_back("item[" + std::to_string(i) + "]");
    }

    const ScalarGraph loss = [&](Tape&, std::span<const Var> p) {
      ModelVars vars;
      std::size_t k = 0;
      for (auto* t : {&vars.soc.co_like, &vars.soc.co_follow, &vars.soc.self_like,
                      &vars.soc.self_follow}) {
        t->w_q = p[k++];
        t->w_k = p[k++];
        t->w_v = p[k++];
      }
      vars.w1 = p[k++];
      vars.b1 = p[k++];
      vars.w2 = p[k++];
      vars.b2 = p[k++];
      const std::size_t base = k;
      Var logits = score_on_tape(model, vars, h, cand,
                                 [&](std::size_t item) { return p[base + item]; });
      return bce_with_logits(logits, labels);
    };

    auto analytic = analytic_gradients(loss, params);
    if (cfg.inject_fault) {
      // Mutation check: a 1% error in one backward result must be caught.
      for (double& g : analytic.front().data()) g *= 1.01;
    }
    const auto numeric = numeric_gradients(loss, params, cfg.gc_eps);
    const GradCheckResult r = compare_gradients(analytic, numeric);
    for (std::size_t p = 0; p < analytic.size(); ++p) {
      worst_abs = std::max(worst_abs, max_abs_diff(analytic[p], numeric[p]));
    }
    log << "trial " << trial << " (seed " << seed << "): max relative error " << std::scientific
        << std::setprecision(3) << r.max_relative_error << " at " << names[r.worst_param] << "["
        << r.worst_index << "] analytic " << r.analytic << " numeric " << r.numeric << "\n"
        << std::defaultfloat;
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      worst_name = names[r.worst_param];
    }
  }
  const bool pass = worst < cfg.gc_tolerance;
  log << "gradcheck " << (pass ? "PASS" : "FAIL") << ": max relative error " << std::scientific
      << std::setprecision(3) << worst << " (" << worst_name << "), max absolute difference " << worst_abs
      << ", tolerance "
      << cfg.gc_tolerance << std::defaultfloat << "\n";
  return pass ? kOk : kNumericError;
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  std::string variant = "full";
  std::string filter = "and";
  std::string optimizer = "adam";

  CLI::App app{"Self-over-co attention recommender: synthetic data, training, evaluation, ablation"};
  app.set_config("--config", "", "Config file (TOML/INI key = value)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--seed", cfg.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();
  app.add_option("--threads", cfg.threads, "OpenMP thread cap (0 = runtime default)")
      ->capture_default_str();

  auto* g_synth = app.add_option_group("synthetic data");
  g_synth->add_option("--users", cfg.synth.users)->capture_default_str();
  g_synth->add_option("--items", cfg.synth.items)->capture_default_str();
  g_synth->add_option("--d-latent", cfg.synth.d_latent)->capture_default_str();
  g_synth->add_option("--topics", cfg.synth.topics)->capture_default_str();
  g_synth->add_option("--like-rate", cfg.synth.like_rate)->capture_default_str();
  g_synth->add_option("--follow-rate", cfg.synth.follow_rate)->capture_default_str();
  g_synth->add_option("--exposure-per-user", cfg.synth.exposure_per_user)->capture_default_str();
  g_synth->add_option("--noise-sigma", cfg.synth.noise_sigma)->capture_default_str();

  auto* g_data = app.add_option_group("data");
  g_data->add_option("--data", cfg.data, "Interaction CSV (default <out>/interactions.csv)");
  g_data->add_option("--features", cfg.features, "Item feature CSV; freezes the item table");
  g_data->add_option("--model", cfg.model, "Model file (default <out>/model.socm)");
  g_data->add_option("--filter-policy", filter, "Keep users with like AND/OR follow")
      ->check(CLI::IsMember({"and", "or"}))
      ->capture_default_str();
  g_data->add_option("--split-ratio", cfg.split_ratio, "Per-user train fraction")
      ->capture_default_str();

  auto* g_model = app.add_option_group("model");
  g_model->add_option("--d", cfg.d, "Embedding dimension")->capture_default_str();
  g_model->add_option("--hidden", cfg.hidden, "Head width (0 = 2d)")->capture_default_str();
  g_model->add_option("--variant", variant, "SoC variant")
      ->check(CLI::IsMember({"full", "co_only", "none"}))
      ->capture_default_str();
  g_model->add_flag("--no-soc", cfg.no_soc, "Remove the SoC path (base model)");
  g_model->add_flag("--scale-logits", cfg.scale_logits, "Scale attention logits by 1/sqrt(d)");
  g_model->add_flag("--literal-self", cfg.literal_self,
                    "Self-attention on raw features with the co-attention projections");

  auto* g_train = app.add_option_group("training");
  g_train->add_option("--epochs", cfg.train.epochs)->capture_default_str();
  g_train->add_option("--batch-size", cfg.train.batch_size)->capture_default_str();
  g_train->add_option("--lr", cfg.train.learning_rate)->capture_default_str();
  g_train->add_option("--optimizer", optimizer)
      ->check(CLI::IsMember({"sgd", "adam"}))
      ->capture_default_str();
  g_train->add_option("--beta1", cfg.train.adam.beta1)->capture_default_str();
  g_train->add_option("--beta2", cfg.train.adam.beta2)->capture_default_str();
  g_train->add_option("--adam-eps", cfg.train.adam.epsilon)->capture_default_str();

  auto* g_eval = app.add_option_group("evaluation");
  g_eval->add_option("--k", cfg.eval.k, "List cutoff for P/R/F")->capture_default_str();
  g_eval->add_flag("--per-user-auc", cfg.eval.per_user_auc, "Average per-user AUC");

  app.add_subcommand("synth", "Generate a synthetic interaction log and item features");
  app.add_subcommand("train", "Train a model and write a checkpoint and loss curve");
  app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate base, SCAA_cs, SCAA_s, SCAA");
  ablate->add_option("--seeds", cfg.seeds, "Repeat with seeds s..s+N-1")->capture_default_str();
  auto* gc = app.add_subcommand("gradcheck", "Check backward() against central differences");
  gc->add_option("--gc-d", cfg.gc_d)->capture_default_str();
  gc->add_option("--gc-m", cfg.gc_m)->capture_default_str();
  gc->add_option("--gc-n", cfg.gc_n)->capture_default_str();
  gc->add_option("--gc-hidden", cfg.gc_hidden)->capture_default_str();
  gc->add_option("--trials", cfg.gc_trials)->capture_default_str();
  gc->add_option("--eps", cfg.gc_eps)->capture_default_str();
  gc->add_option("--tolerance", cfg.gc_tolerance)->capture_default_str();
  gc->add_flag("--inject-fault", cfg.inject_fault, "Corrupt one analytic gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    log << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    cfg.variant = parse_variant(variant);
    cfg.filter_policy = parse_filter_policy(filter);
    cfg.train.optimizer = parse_optimizer(optimizer);
    cfg.train.validate();
    cfg.synth.validate();
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
      throw ConfigError("--split-ratio must lie in (0, 1)");
    }
    if (cfg.d < 1) throw ConfigError("--d must be at least 1");
    if (cfg.eval.k < 1) throw ConfigError("--k must be at least 1");
    set_thread_limit(cfg.threads);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") return cmd_synth(cfg, log);
    if (name == "train") return cmd_train(cfg, log);
    if (name == "eval") return cmd_eval(cfg, log);
    if (name == "ablate") return cmd_ablate(cfg, log);
    return cmd_gradcheck(cfg, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const IndexError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const UndefinedMetricError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace socrec::cli
