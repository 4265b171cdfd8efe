#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ncelab/corpus.hpp"
#include "ncelab/gradcheck.hpp"
#include "ncelab/io.hpp"
#include "ncelab/negsampling.hpp"
#include "ncelab/nce.hpp"
#include "ncelab/trainer.hpp"

namespace ncelab::cli {

namespace {

struct GenDataArgs {
  std::size_t vocab_size = 16;
  double zipf_s = 1.2;
  double rank_jitter = 6.0;
  std::size_t tokens = 100000;
  std::uint64_t seed = 1;
  std::string out_prefix;
};

struct TrainArgs {
  std::string corpus;
  std::string truth;
  std::string objective = "nce";
  std::size_t k = 10;
  std::string z_mode = "learned";
  std::string noise = "unigram";
  double lr = 0.5;
  double lr_decay = 0.98;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t dim = 16;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;
  std::size_t threads = 1;
  std::string out;
  bool checkpoints = false;
  bool wall_clock = false;
  std::string dump_proxy;
};

struct SweepArgs {
  TrainArgs train;
  std::string ks = "1,2,5,10,25,50";
  std::size_t seeds = 5;
};

struct EvalArgs {
  std::string model;
  std::string corpus;
  std::string truth;
  std::string out;
};

struct GradcheckArgs {
  std::uint64_t seed = 1;
  std::string which = "all";
  double corrupt = 0.0;
};

struct EquivArgs {
  std::size_t vocab_size = 8;
  std::uint64_t seed = 1;
  std::size_t k = 0;
  std::size_t draws = 20;
};

void add_training_options(CLI::App* cmd, TrainArgs& a, bool with_out) {
  cmd->add_option("--corpus", a.corpus, "Corpus text file")->required();
  cmd->add_option("--objective", a.objective, "mle, nce or ns")
      ->capture_default_str()
      ->check(CLI::IsMember({"mle", "nce", "ns"}));
  cmd->add_option("--k", a.k, "Noise samples per example")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--z-mode", a.z_mode, "learned or fixed (NCE)")
      ->capture_default_str()
      ->check(CLI::IsMember({"learned", "fixed"}));
  cmd->add_option("--noise", a.noise, "uniform, unigram or flattened:<alpha>")->capture_default_str();
  cmd->add_option("--lr", a.lr, "Initial learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--lr-decay", a.lr_decay, "Per-epoch learning-rate factor in (0,1]")
      ->capture_default_str()
      ->check(CLI::Range(1e-12, 1.0));
  cmd->add_option("--epochs", a.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", a.batch_size, "Minibatch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--dim", a.dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  cmd->add_option("--eval-every", a.eval_every, "Metrics interval in epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", a.threads, "Worker threads per batch")->capture_default_str()->check(CLI::PositiveNumber);
  if (with_out) cmd->add_option("--out", a.out, "Output prefix")->required();
}

TrainConfig to_config(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.objective = parse_objective(a.objective);
  cfg.k = a.k;
  cfg.z_mode = parse_zmode(a.z_mode);
  cfg.noise = NoiseSpec::parse(a.noise);
  cfg.learning_rate = a.lr;
  cfg.lr_decay = a.lr_decay;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.dim = a.dim;
  cfg.seed = a.seed;
  cfg.eval_every = a.eval_every;
  cfg.threads = a.threads;
  cfg.validate();
  return cfg;
}

struct LoadedCorpus {
  Vocabulary vocab;
  std::vector<Pair> pairs;
  std::optional<GroundTruthTable> truth;
};

// With a truth table the vocabulary comes from it, so ids line up for KL.
LoadedCorpus load_corpus(const std::string& corpus_path, const std::string& truth_path) {
  LoadedCorpus data;
  const auto tokens = io::read_corpus(corpus_path);
  if (!truth_path.empty()) {
    data.truth = io::parse_truth(io::read_file(truth_path));
    data.vocab = Vocabulary(data.truth->words);
  } else {
    data.vocab = build_vocab(tokens);
  }
  data.pairs = to_pairs(tokens, data.vocab);
  return data;
}

void write_config_echo(const std::string& path, const CLI::App* cmd) {
  io::write_file(path, fmt::format("# {}\n# command: {}\n{}", kVersion, cmd->get_name(), cmd->config_to_str(true, false)));
}

int cmd_gen_data(const GenDataArgs& a, const CLI::App* cmd, std::ostream& out) {
  ZipfTruthOptions opts;
  opts.vocab_size = a.vocab_size;
  opts.exponent = a.zipf_s;
  opts.rank_jitter = a.rank_jitter;
  opts.seed = a.seed;
  const auto truth = make_zipf_truth(opts);
  const auto ids = generate_markov_tokens(truth, a.tokens, a.seed);
  std::string text;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    text += truth.words[ids[i]];
    text += (i + 1) % 20 == 0 || i + 1 == ids.size() ? '\n' : ' ';
  }
  io::write_file(a.out_prefix + ".truth", io::format_truth(truth));
  io::write_file(a.out_prefix + ".txt", text);
  write_config_echo(a.out_prefix + ".config", cmd);
  fmt::print(out, "wrote {0}.truth and {0}.txt ({1} tokens, |V|={2})\n", a.out_prefix, ids.size(), truth.vocab_size());
  return exit_code::kOk;
}

int cmd_train(const TrainArgs& a, const CLI::App* cmd, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = to_config(a);
  const auto data = load_corpus(a.corpus, a.truth);
  if (cfg.objective == Objective::NS && cfg.z_mode == ZMode::LEARNED_ZC)
    fmt::print(err, "warning: negative sampling has no normalizer; log_zc stays frozen at 0 under --z-mode learned\n");
  write_config_echo(a.out + ".config", cmd);

  if (!a.dump_proxy.empty() && cfg.objective != Objective::MLE_EXACT) {
    const CorpusStats stats(data.vocab.size(), data.pairs);
    const auto q = NoiseDistribution::from_spec(cfg.noise, stats);
    std::string dump;
    for (const auto& ex : gen_proxy(data.pairs, q, cfg.k, cfg.seed)) dump += io::format_proxy_line(data.vocab, ex) + '\n';
    io::write_file(a.dump_proxy, dump);
  }

  EpochHook hook;
  if (a.checkpoints) {
    hook = [&](std::size_t epoch, const ModelParams& p) {
      io::write_file(fmt::format("{}.ep{}.model", a.out, epoch), io::format_model(data.vocab, p));
    };
  }
  const auto result = train(cfg, data.vocab.size(), data.pairs, data.truth ? &*data.truth : nullptr, hook);
  io::write_file(a.out + ".metrics.csv", io::format_metrics(result.metrics, a.wall_clock));
  io::write_file(a.out + ".model", io::format_model(data.vocab, result.params));
  const auto& last = result.metrics.back();
  fmt::print(out, "epochs {}  cross_entropy {:.9g}  median_abs_log_z {:.9g}", last.epoch, last.cross_entropy,
             last.median_abs_log_z);
  if (last.kl_truth) fmt::print(out, "  kl_truth {:.9g}", *last.kl_truth);
  fmt::print(out, "\nwrote {0}.model, {0}.metrics.csv, {0}.config\n", a.out);
  return exit_code::kOk;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      throw ParseError(fmt::format("bad k '{}' in --ks", item));
    }
    if (pos != item.size() || v == 0) throw ParseError(fmt::format("bad k '{}' in --ks", item));
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw ParseError("--ks is empty");
  return ks;
}

int cmd_sweep(const SweepArgs& a, const CLI::App* cmd, std::ostream& out) {
  const TrainConfig base = to_config(a.train);
  const auto ks = parse_ks(a.ks);
  if (!std::is_sorted(ks.begin(), ks.end())) throw ParseError("--ks must be sorted ascending");
  const auto data = load_corpus(a.train.corpus, a.train.truth);
  write_config_echo(a.train.out + ".config", cmd);

  std::ofstream csv(a.train.out, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError(fmt::format("cannot write '{}'", a.train.out));
  csv << "k,seed,final_kl,final_ce,median_abs_log_z\n" << std::flush;
  for (std::size_t k : ks) {
    for (std::size_t i = 0; i < a.seeds; ++i) {
      TrainConfig cfg = base;
      cfg.seed = base.seed + i;
      const std::size_t one_k[] = {k};
      const auto rows = sweep_k(cfg, one_k, data.vocab.size(), data.pairs, *data.truth);
      const auto& r = rows.front();
      csv << fmt::format("{},{},{:.9g},{:.9g},{:.9g}\n", r.k, cfg.seed, r.final_kl, r.final_ce, r.median_abs_log_z)
          << std::flush;
      fmt::print(out, "k={} seed={} final_kl={:.6g}\n", r.k, cfg.seed, r.final_kl);
    }
  }
  return exit_code::kOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto model = io::parse_model(io::read_file(a.model));
  const auto tokens = io::read_corpus(a.corpus);
  std::vector<Pair> pairs;
  try {
    pairs = to_pairs(tokens, model.vocab);
  } catch (const Error& e) {
    throw ParseError(fmt::format("vocab mismatch between model and corpus: {}", e.what()));
  }
  std::optional<GroundTruthTable> truth;
  if (!a.truth.empty()) {
    truth = io::parse_truth(io::read_file(a.truth));
    if (truth->words != model.vocab.words()) throw ParseError("vocab mismatch between model and truth");
  }
  const CorpusStats stats(model.vocab.size(), pairs);
  const double ce = cross_entropy(model.params, stats);
  const auto seen = stats.seen_contexts();
  const auto norm = normalization_stats(model.params, seen);

  std::string csv = "metric,value\n";
  fmt::print(out, "cross_entropy {:.9g} nats/token over {} tokens\n", ce, stats.total_tokens());
  csv += fmt::format("cross_entropy,{:.9g}\n", ce);
  if (truth) {
    double total = 0.0;
    for (std::size_t c = 0; c < truth->vocab_size(); ++c) {
      const double kl = kl_divergence(truth->row(static_cast<ContextId>(c)),
                                      softmax_row(model.params, static_cast<ContextId>(c)));
      total += kl;
      fmt::print(out, "kl_truth[{}] {:.9g}\n", model.vocab.word_of(static_cast<WordId>(c)), kl);
      csv += fmt::format("kl_truth:{},{:.9g}\n", model.vocab.word_of(static_cast<WordId>(c)), kl);
    }
    const double mean = total / static_cast<double>(truth->vocab_size());
    fmt::print(out, "mean_kl_truth {:.9g}\n", mean);
    csv += fmt::format("mean_kl_truth,{:.9g}\n", mean);
  }
  fmt::print(out, "log_z min {:.9g} median {:.9g} max {:.9g} over {} seen contexts\n", norm.min, norm.median,
             norm.max, seen.size());
  csv += fmt::format("log_z_min,{:.9g}\nlog_z_median,{:.9g}\nlog_z_max,{:.9g}\n", norm.min, norm.median, norm.max);
  if (!a.out.empty()) io::write_file(a.out, csv);
  return exit_code::kOk;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::vector<GradCheckTarget> targets;
  if (a.which == "mle" || a.which == "all") targets.push_back(GradCheckTarget::MLE);
  if (a.which == "nce-mc" || a.which == "all") {
    targets.push_back(GradCheckTarget::NCE_MC_LEARNED);
    targets.push_back(GradCheckTarget::NCE_MC_FIXED);
  }
  if (a.which == "nce-exact" || a.which == "all") targets.push_back(GradCheckTarget::NCE_EXACT);
  if (a.which == "ns" || a.which == "all") targets.push_back(GradCheckTarget::NS);

  constexpr double kTolerance = 1e-5;
  GradCheckSetup setup;
  setup.corrupt = a.corrupt;
  bool ok = true;
  for (auto t : targets) {
    const auto report = run_gradcheck(t, a.seed, setup);
    fmt::print(out, "{}: max relative error {:.3e}\n", report.name, report.max_error());
    for (const auto& b : report.blocks)
      fmt::print(out, "  {:<12} worst {:.3e} at coordinate {} (analytic {:.9g}, numeric {:.9g})\n", b.block, b.worst,
                 b.worst_coord, b.analytic, b.numeric);
    if (report.max_error() > kTolerance) {
      const auto& w = report.worst_block();
      fmt::print(out, "FAIL {}: {} coordinate {} relative error {:.3e} > {:.0e}\n", report.name, w.block,
                 w.worst_coord, w.worst, kTolerance);
      ok = false;
    }
  }
  return ok ? exit_code::kOk : exit_code::kVerificationFailed;
}

int cmd_equiv(const EquivArgs& a, std::ostream& out) {
  const std::size_t k = a.k == 0 ? a.vocab_size : a.k;
  constexpr double kTolerance = 1e-10;
  const auto r = compare_ns_with_nce(a.vocab_size, k, a.seed, a.draws);
  fmt::print(out, "|V|={} k={} draws={}\n", a.vocab_size, k, r.draws);
  fmt::print(out, "max |dloss| {:.3e}\nmax |dgrad| {:.3e}\n", r.max_loss_diff, r.max_grad_diff);
  const bool ok = r.max_loss_diff <= kTolerance && r.max_grad_diff <= kTolerance;
  fmt::print(out, "{}\n", ok ? "equivalent" : fmt::format("NOT equivalent: max deviation {:.3e}",
                                                          std::max(r.max_loss_diff, r.max_grad_diff)));
  return ok ? exit_code::kOk : exit_code::kVerificationFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise contrastive estimation and negative sampling for a log-bilinear bigram model", "ncelab"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic Zipf ground truth and a corpus sampled from it");
  gen_cmd->add_option("--vocab-size", gen.vocab_size, "Vocabulary size")->capture_default_str()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  gen_cmd->add_option("--zipf-s", gen.zipf_s, "Zipf exponent of each row")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--rank-jitter", gen.rank_jitter, "Per-context rank jitter half-width")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--tokens", gen.tokens, "Corpus length")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out-prefix", gen.out_prefix, "Writes <prefix>.truth, <prefix>.txt")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write <out>.model and <out>.metrics.csv");
  add_training_options(train_cmd, tr, true);
  train_cmd->add_option("--truth", tr.truth, "Ground-truth file for KL metrics");
  train_cmd->add_flag("--checkpoints", tr.checkpoints, "Write <out>.ep<epoch>.model at every evaluation");
  train_cmd->add_flag("--wall-clock", tr.wall_clock, "Fill the seconds column of the metrics CSV");
  train_cmd->add_option("--dump-proxy", tr.dump_proxy, "Write the epoch-mode proxy corpus to this file");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train once per (k, seed) and write final metrics as CSV");
  add_training_options(sweep_cmd, sw.train, true);
  sweep_cmd->add_option("--truth", sw.train.truth, "Ground-truth file")->required();
  sweep_cmd->add_option("--ks", sw.ks, "Comma-separated ascending k values")->capture_default_str();
  sweep_cmd->add_option("--seeds", sw.seeds, "Number of seeds, starting at --seed")->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Report cross-entropy, KL to truth and partition statistics");
  eval_cmd->add_option("--model", ev.model, "Model file")->required();
  eval_cmd->add_option("--corpus", ev.corpus, "Corpus text file")->required();
  eval_cmd->add_option("--truth", ev.truth, "Ground-truth file");
  eval_cmd->add_option("--out", ev.out, "Optional metric,value CSV");

  GradcheckArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central finite differences");
  grad_cmd->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
  grad_cmd->add_option("--which", gc.which, "mle, nce-mc, nce-exact, ns or all")
      ->capture_default_str()
      ->check(CLI::IsMember({"mle", "nce-mc", "nce-exact", "ns", "all"}));
  grad_cmd->add_option("--corrupt-gradient", gc.corrupt, "Test hook: add this to one analytic coordinate")->group("");

  EquivArgs eq;
  auto* equiv_cmd = app.add_subcommand("equiv-check", "Check negative sampling equals NCE at k=|V| with uniform noise");
  equiv_cmd->add_option("--vocab-size", eq.vocab_size, "Vocabulary size")->capture_default_str()->check(CLI::Range(std::size_t{2}, std::size_t{4096}));
  equiv_cmd->add_option("--seed", eq.seed, "Random seed")->capture_default_str();
  equiv_cmd->add_option("--draws", eq.draws, "Random (model, batch) draws")->capture_default_str()->check(CLI::PositiveNumber);
  equiv_cmd->add_option("--k", eq.k, "Test hook: noise words per example (default |V|)")->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version requests arrive here as CLI::Success with exit code 0.
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, gen_cmd, out);
    if (*train_cmd) return cmd_train(tr, train_cmd, out, err);
    if (*sweep_cmd) return cmd_sweep(sw, sweep_cmd, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*grad_cmd) return cmd_gradcheck(gc, out);
    if (*equiv_cmd) return cmd_equiv(eq, out);
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  }
  return exit_code::kUsage;
}

}  // namespace ncelab::cli
