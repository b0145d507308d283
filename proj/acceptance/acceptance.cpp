// Runs the acceptance checks and prints one PASS/FAIL line per criterion.
// Criteria 2-4 execute filtered subsets of the unit-test binaries; the rest
// train and evaluate desk-scale models on synthetic data.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "cli.hpp"
#include "forgerecon/checkpoint.hpp"
#include "forgerecon/metrics.hpp"
#include "forgerecon/synthetic.hpp"
#include "forgerecon/training.hpp"

namespace fs = std::filesystem;
using namespace forgerecon;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ------------------------------------------------------------ desk recipe

constexpr int kImageSize = 32;
constexpr int kTrainPairs = 1000;  // 2000 images
constexpr int kTestPairs = 250;    // 500 images
constexpr int kValPairs = 100;
constexpr std::uint64_t kValSeedOffset = 2'000'000;

TrainConfig desk_config(Ablation ablation, std::uint64_t seed) {
  TrainConfig c;
  c.backbone = BackboneConfig::tiny(kImageSize);
  c.ablation = ablation;
  c.lr = 1e-3;
  c.batch_size = 16;
  c.epochs = 5;
  c.seed = seed;
  return c;
}

SyntheticConfig synthetic(std::vector<TamperKind> kinds = {}) {
  SyntheticConfig s;
  s.image_size = kImageSize;
  if (!kinds.empty()) s.tamper_kinds = std::move(kinds);
  return s;
}

struct Splits {
  Dataset train, val, test;
};

Splits make_splits(const SyntheticConfig& train_kinds, const SyntheticConfig& test_kinds) {
  return {synthetic_dataset(train_kinds, kTrainPairs, 0), synthetic_dataset(train_kinds, kValPairs, kValSeedOffset),
          synthetic_dataset(test_kinds, kTestPairs, kTestSeedOffset)};
}

struct DeskRun {
  std::unique_ptr<Model> model;
  TrainConfig config;
  EvalResult test;
  double seconds = 0.0;
};

DeskRun desk_run(const TrainConfig& config, const Splits& data) {
  const auto t0 = Clock::now();
  TrainOptions opts;
  opts.on_epoch = [&](const EpochRecord& e) {
    spdlog::info("  {} seed {} epoch {} val AUC {:.4f} ({:.0f} s)", to_string(config.ablation), config.seed,
                 e.epoch + 1, e.validation_auc, seconds_since(t0));
  };
  TrainResult r = train(config, data.train, data.val, opts);
  DeskRun run{std::move(r.model), config, {}, 0.0};
  run.seconds = seconds_since(t0);
  run.test = evaluate(*run.model, data.test, config.eval_batch_size);
  return run;
}

// ------------------------------------------------------------ shared state

struct Context {
  fs::path source_dir, bin_dir, out_dir;
  std::optional<Splits> seen;
  std::optional<DeskRun> main_run;  // full model, seed 0

  const Splits& seen_splits() {
    if (!seen) seen = make_splits(synthetic(), synthetic());
    return *seen;
  }
  DeskRun& desk() {
    if (!main_run) {
      spdlog::info("desk run: full model, seed 0");
      main_run = desk_run(desk_config(Ablation::full, 0), seen_splits());
    }
    return *main_run;
  }
  fs::path desk_checkpoint() {
    const fs::path p = out_dir / "desk_full_seed0.ckpt";
    if (!fs::exists(p)) save_checkpoint(p, capture_checkpoint(*desk().model, desk().config));
    return p;
  }
};

// ------------------------------------------------------------ unit suites

struct SuiteRun {
  int tests = 0, failures = 0;
  double seconds = 0.0;
  std::string missing;
};

// Runs a gtest binary with a filter and reads its JSON report.
SuiteRun run_suite(const Context& ctx, const std::string& binary, const std::string& filter) {
  const fs::path json = ctx.out_dir / fmt::format("{}_{}.json", binary, std::hash<std::string>{}(filter) % 100000);
  const fs::path log = ctx.out_dir / (binary + ".log");
  const std::string cmd = fmt::format("\"{}\" --gtest_filter='{}' --gtest_output=json:\"{}\" >> \"{}\" 2>&1",
                                      (ctx.bin_dir / binary).string(), filter, json.string(), log.string());
  fs::remove(json);
  const auto t0 = Clock::now();
  const int status = std::system(cmd.c_str());
  SuiteRun r;
  r.seconds = seconds_since(t0);
  std::ifstream f(json);
  if (!f) {
    r.missing = binary + " produced no report";
    r.failures = 1;
    return r;
  }
  const auto report = nlohmann::json::parse(f);
  r.tests = report.value("tests", 0);
  r.failures = report.value("failures", 0) + report.value("errors", 0) + (status != 0 && r.failures == 0);
  // Every pattern in the filter must have selected at least one test.
  std::set<std::string> seen;
  for (const auto& suite : report["testsuites"])
    for (const auto& t : suite["testsuite"]) seen.insert(suite["name"].get<std::string>() + "." + t["name"].get<std::string>());
  std::stringstream ss(filter);
  for (std::string pat; std::getline(ss, pat, ':');) {
    const bool wildcard = pat.find('*') != std::string::npos;
    const std::string prefix = wildcard ? pat.substr(0, pat.find('*')) : pat;
    const bool found = std::any_of(seen.begin(), seen.end(), [&](const std::string& n) {
      return wildcard ? n.starts_with(prefix) : n == pat;
    });
    if (!found) r.missing += (r.missing.empty() ? "" : ", ") + binary + ":" + pat;
  }
  return r;
}

Verdict suites_verdict(const Context& ctx, const std::vector<std::pair<std::string, std::string>>& suites,
                       double time_limit = 0.0) {
  int tests = 0, failures = 0;
  double seconds = 0.0;
  std::string missing;
  for (const auto& [binary, filter] : suites) {
    const SuiteRun r = run_suite(ctx, binary, filter);
    tests += r.tests;
    failures += r.failures;
    seconds += r.seconds;
    if (!r.missing.empty()) missing += (missing.empty() ? "" : "; ") + r.missing;
  }
  Verdict v;
  v.pass = failures == 0 && missing.empty() && tests > 0 && (time_limit <= 0.0 || seconds < time_limit);
  v.detail = fmt::format("{} tests, {} failed, {:.1f} s", tests, failures, seconds);
  if (time_limit > 0.0) v.detail += fmt::format(" (limit {:.0f} s)", time_limit);
  if (!missing.empty()) v.detail += "; no tests matched " + missing;
  return v;
}

// ------------------------------------------------------------ criteria

Verdict criterion1(Context& ctx) {
  std::ifstream f(ctx.source_dir / "README.md");
  if (!f) return {false, "README.md not found"};
  std::string line, section;
  bool in_section = false;
  while (std::getline(f, line)) {
    if (line.starts_with("## ")) in_section = line.find("Reproducibility") != std::string::npos;
    else if (in_section) section += line + "\n";
  }
  std::string lower = section;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  const bool ok = lower.find("not reproduce") != std::string::npos || lower.find("not reproduced") != std::string::npos;
  return {ok, ok ? "README Reproducibility section declares full-scale results not reproduced"
                 : "README lacks a Reproducibility section declaring non-reproduction"};
}

Verdict criterion2(Context& ctx) {
  return suites_verdict(ctx,
                        {{"test_ops", "OpsGrad.*"},
                         {"test_attention", "Attention.BlockGradient"},
                         {"test_decoder", "FeatureSelection.Gradient"},
                         {"test_graph_head", "GraphHead.Gradient"},
                         {"test_reconstruction", "Reconstruction.HeadGradients"},
                         {"test_detector", "FeatureAggregation.Gradient:Classifier.Gradient"},
                         {"test_losses", "MetricLoss.Gradient:ReconstructionLoss.Gradient:TotalLoss.Gradient"},
                         {"test_encoder", "Encoder.TwoStageInputGradient"},
                         {"test_training", "Model.WholeModelSampledGradient"}},
                        60.0);
}

Verdict criterion3(Context& ctx) {
  return suites_verdict(ctx, {{"test_metrics", "Auc.MatchesPairOracleOn200Instances:Eer.MatchesSweepOracleOn200Instances"},
                              {"test_losses", "MetricLoss.MatchesPairLoopOracleOn100Batches"}});
}

Verdict criterion4(Context& ctx) {
  return suites_verdict(
      ctx, {{"test_encoder", "Encoder.ZeroInputPropagatesToZeroFeatures:Encoder.ShapeContractOverGrid"},
            {"test_attention",
             "Attention.ZeroInputGivesConstantNormalisedPath:Attention.ZeroConv1IsResidualIdentity:"
             "Attention.ShapePreserved:AttentionCascade.ShapesFollowPyramid:AttentionCascade.ZeroPyramidWithZeroConv1IsZero"},
            {"test_decoder",
             "FeatureSelection.OutputShape:FeatureSelection.ZeroInputsGiveZeroOutput:Decoder.FinalStageAtSecondScale:"
             "Decoder.ZeroPyramidGivesZeroStages"},
            {"test_graph_head", "GraphHead.CorrelationRowsAreStochastic:GraphHead.ZeroWzIsResidualIdentity:GraphHead.OutputShape"},
            {"test_ops", "Ops.SoftmaxRowsAreStochastic"},
            {"test_reconstruction", "Reconstruction.OutputMatchesInputShape:Reconstruction.ZeroFeaturesAndBiasesGiveZero"},
            {"test_detector", "DifferenceMask.*:EncodingFusion.ZeroProjectionPassesF5Through"}});
}

Verdict criterion5(Context& ctx) {
  DeskRun& run = ctx.desk();
  const bool seen_ok = run.test.report.auc >= 0.90 && run.seconds <= 600.0;

  spdlog::info("cross-forgery run: train splice, test local_blur");
  const Splits cross = make_splits(synthetic({TamperKind::splice}), synthetic({TamperKind::local_blur}));
  const DeskRun xr = desk_run(desk_config(Ablation::full, 0), cross);
  const double observed = xr.test.report.auc;
  std::mt19937_64 rng(2024);
  std::vector<int> shuffled = cross.test.labels;
  std::vector<double> null;
  for (int i = 0; i < 100; ++i) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    null.push_back(auc(xr.test.scores, shuffled));
  }
  std::sort(null.begin(), null.end());
  const double p975 = null[97];  // 98th of 100 order statistics
  const bool cross_ok = observed > p975;
  return {seen_ok && cross_ok,
          fmt::format("seen-kind AUC {:.4f} (>= 0.90) in {:.0f} s (<= 600); cross-forgery AUC {:.4f} vs null p97.5 "
                      "{:.4f} in {:.0f} s",
                      run.test.report.auc, run.seconds, observed, p975, xr.seconds)};
}

Verdict criterion6(Context& ctx) {
  const std::vector<Ablation> variants{Ablation::baseline, Ablation::rec1, Ablation::rec2, Ablation::double_head,
                                       Ablation::full};
  std::map<Ablation, std::vector<double>> aucs;
  std::ofstream csv(ctx.out_dir / "ablation.csv");
  csv << "ablation,seed,auc,seconds\n";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (Ablation a : variants) {
      double value, secs;
      if (a == Ablation::full && seed == 0) {
        value = ctx.desk().test.report.auc;
        secs = ctx.desk().seconds;
      } else {
        const DeskRun r = desk_run(desk_config(a, seed), ctx.seen_splits());
        value = r.test.report.auc;
        secs = r.seconds;
      }
      aucs[a].push_back(value);
      csv << to_string(a) << "," << seed << "," << fmt::format("{:.17g}", value) << "," << fmt::format("{:.1f}", secs)
          << "\n";
      csv.flush();
    }
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double base = mean(aucs[Ablation::baseline]);
  const double single = 0.5 * (mean(aucs[Ablation::rec1]) + mean(aucs[Ablation::rec2]));
  const double dbl = mean(aucs[Ablation::double_head]);
  const double full = mean(aucs[Ablation::full]);
  // Adjacent comparisons are non-strict; one of them may be reversed within
  // the tie tolerance.
  constexpr double kTie = 0.005;
  const std::array<std::pair<double, double>, 3> pairs{{{full, dbl}, {dbl, single}, {single, base}}};
  int ties = 0;
  bool ok = true;
  for (const auto& [hi, lo] : pairs) {
    if (hi >= lo) continue;
    if (lo - hi <= kTie) ++ties;
    else ok = false;
  }
  ok = ok && ties <= 1;
  return {ok, fmt::format("mean AUC full {:.4f} >= double {:.4f} >= single {:.4f} (rec1 {:.4f}, rec2 {:.4f}) >= "
                          "baseline {:.4f}; reversed-within-{} ties {}",
                          full, dbl, single, mean(aucs[Ablation::rec1]), mean(aucs[Ablation::rec2]), base, kTie, ties)};
}

Verdict criterion7(Context& ctx) {
  DeskRun& run = ctx.desk();
  const Dataset& test = ctx.seen_splits().test;
  std::vector<double> m1, m2;
  NoGradGuard guard;
  for (std::size_t start = 0; start < test.size(); start += 64) {
    std::vector<std::size_t> idx(std::min<std::size_t>(64, test.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const ModelOutputs out = run.model->forward(Var(make_batch(test, idx), false));
    const std::size_t per = out.mask1.value().size() / idx.size();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const double* a = out.mask1.value().data() + b * per;
      const double* c = out.mask2.value().data() + b * per;
      m1.push_back(std::accumulate(a, a + per, 0.0) / per);
      m2.push_back(std::accumulate(c, c + per, 0.0) / per);
    }
  }
  const double a1 = auc(m1, test.labels), a2 = auc(m2, test.labels);
  return {std::max(a1, a2) >= 0.70,
          fmt::format("mask-mean AUROC head1 {:.4f}, head2 {:.4f}, max {:.4f} (>= 0.70)", a1, a2, std::max(a1, a2))};
}

Verdict criterion8(Context& ctx) {
  DeskRun& run = ctx.desk();
  const Dataset& test = ctx.seen_splits().test;
  bool identical = true;
  for (PerturbationKind k : kAllPerturbations) {
    const auto s = score_dataset(*run.model, test, run.config.eval_batch_size, PerturbationSpec{k, 0});
    identical = identical && s.size() == run.test.scores.size() &&
                std::equal(s.begin(), s.end(), run.test.scores.begin(),
                           [](double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; });
  }

  bool per_image_monotone = true;
  std::array<double, kMaxSeverity + 1> mean_sharpness{};
  for (const Tensor& img : test.images) {
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= kMaxSeverity; ++s) {
      const double v = laplacian_variance(perturb(img, {PerturbationKind::gaussian_blur, s}));
      per_image_monotone = per_image_monotone && v <= prev;
      mean_sharpness[s] += v / test.size();
      prev = v;
    }
  }
  const bool mean_strict = std::adjacent_find(mean_sharpness.begin(), mean_sharpness.end(),
                                              [](double a, double b) { return b >= a; }) == mean_sharpness.end();

  // End to end through the command line, on materialised PNGs.
  const fs::path data = ctx.out_dir / "desk_data";
  if (!fs::exists(data / "test")) {
    materialize_synthetic(data, synthetic(), 0, kTestPairs);
  }
  const fs::path ckpt = ctx.desk_checkpoint();
  const fs::path out = ctx.out_dir / "robustness";
  std::ostringstream so, se;
  const auto t0 = Clock::now();
  const int code = cli::run_cli({"robustness", "--checkpoint", ckpt.string(), "--data-root", data.string(),
                                 "--output-dir", out.string(), "--severity-max", "5"},
                                so, se);
  const double secs = seconds_since(t0);
  std::size_t rows = 0;
  std::ifstream f(out / "robustness.csv");
  for (std::string line; std::getline(f, line);) rows += !line.empty();
  rows = rows > 0 ? rows - 1 : 0;
  const bool ok = identical && per_image_monotone && mean_strict && code == 0 && rows == 30 && secs < 120.0;
  return {ok, fmt::format("severity-0 bit-identical for 5 kinds: {}; blur sharpness non-increasing per image: {}, "
                          "mean strictly decreasing: {}; CLI exit {} with {} rows in {:.1f} s (< 120)",
                          identical ? "yes" : "no", per_image_monotone ? "yes" : "no", mean_strict ? "yes" : "no",
                          code, rows, secs)};
}

Verdict criterion9(Context& ctx) {
  const Splits& data = ctx.seen_splits();
  TrainConfig c = desk_config(Ablation::full, 7);
  c.max_steps = 10;
  c.epochs = 1;
  auto trace = [&] {
    const TrainResult r = train(c, data.train, data.val);
    std::vector<std::string> rows;
    for (const auto& s : r.steps) rows.push_back(step_log_row(s));
    return rows;
  };
  const auto t1 = trace(), t2 = trace();
  const bool traces = t1.size() == 10 && t1 == t2;

  DeskRun& run = ctx.desk();
  const LoadedModel loaded = load_model(ctx.desk_checkpoint());
  std::vector<std::size_t> idx(32);
  std::iota(idx.begin(), idx.end(), 0);
  const Tensor batch = make_batch(data.test, idx);
  NoGradGuard guard;
  const ModelOutputs a = run.model->forward(Var(batch, false));
  const ModelOutputs b = loaded.model->forward(Var(batch, false));
  const bool same = bit_identical(a.logits.value(), b.logits.value()) &&
                    bit_identical(a.recon.first.value(), b.recon.first.value()) &&
                    bit_identical(a.recon.second.value(), b.recon.second.value());
  return {traces && same, fmt::format("10-step traces bit-identical: {}; checkpoint round-trip forward bit-identical: {}",
                                      traces ? "yes" : "no", same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Context ctx;
  ctx.source_dir = FORGERECON_SOURCE_DIR;
  ctx.bin_dir = fs::absolute(argv[0]).parent_path();
  std::string out_dir = "acceptance_out";
  std::vector<int> only;
  app.add_option("--output-dir", out_dir, "Directory for logs and artefacts")->capture_default_str();
  app.add_option("--bin-dir", ctx.bin_dir, "Directory holding the unit-test binaries");
  app.add_option("--only", only, "Run only these criteria (1-9)")->delimiter(',')->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  ctx.out_dir = fs::absolute(out_dir);
  fs::create_directories(ctx.out_dir);

  using Check = Verdict (*)(Context&);
  const std::array<Check, 9> checks{criterion1, criterion2, criterion3, criterion4, criterion5,
                                    criterion6, criterion7, criterion8, criterion9};
  std::vector<std::string> lines;
  bool all = true;
  for (int i = 1; i <= 9; ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), i) == only.end()) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = checks[i - 1](ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all = all && v.pass;
    lines.push_back(fmt::format("criterion {} {}  {}  [{:.0f} s]", i, v.pass ? "PASS" : "FAIL", v.detail, seconds_since(t0)));
    fmt::print("{}\n", lines.back());
    std::fflush(stdout);
  }
  std::ofstream summary(ctx.out_dir / "summary.txt");
  for (const auto& l : lines) summary << l << "\n";
  return all ? 0 : 1;
}
