#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "forgerecon/checkpoint.hpp"
#include "forgerecon/errors.hpp"
#include "forgerecon/image_io.hpp"
#include "forgerecon/synthetic.hpp"
#include "forgerecon/training.hpp"
#include "forgerecon/visualize.hpp"

namespace forgerecon::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::string data_root;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ablation;
  int severity_max = kMaxSeverity;
  int train_pairs = 1000;
  int test_pairs = 250;
  int image_size = 32;
  std::vector<std::string> kinds;
};

// A validation failure detected by the CLI itself.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require_exists(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

fs::path prepare_output(const Options& o) {
  fs::create_directories(o.output_dir);
  return o.output_dir;
}

LoadedModel open_checkpoint(const Options& o) {
  require_exists(o.checkpoint, "checkpoint");
  return load_model(o.checkpoint);
}

// An image to visualise, with the output file stem it maps to.
struct NamedImage {
  std::string name;
  Tensor image;
};

// Images from root/test/{real,fake} when that layout exists, otherwise every
// image directly inside root.
std::vector<NamedImage> collect_images(const fs::path& root, const BackboneConfig& backbone) {
  std::vector<NamedImage> images;
  if (fs::is_directory(root / "test")) {
    const Dataset d = load_dataset(root, "test", backbone.input_h, backbone.input_w);
    for (std::size_t i = 0; i < d.size(); ++i) {
      images.push_back({(d.labels[i] ? "fake_" : "real_") + fs::path(d.sources[i]).stem().string(), d.images[i]});
    }
    return images;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DatasetError("no images found in " + root.string());
  for (const auto& f : files) {
    images.push_back({f.stem().string(), resize_image(read_image(f), backbone.input_h, backbone.input_w)});
  }
  return images;
}

int cmd_train(const Options& o, std::ostream& out) {
  require_exists(o.data_root, "data root");
  if (!o.config.empty()) require_exists(o.config, "config");
  TrainConfig config = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (o.ablation) config.ablation = parse_ablation(*o.ablation);
  config.validate();

  const auto& bb = config.backbone;
  const Dataset train_set = load_dataset(o.data_root, "train", bb.input_h, bb.input_w);
  const std::string val_split = fs::is_directory(fs::path(o.data_root) / "val") ? "val" : "test";
  const Dataset val_set = load_dataset(o.data_root, val_split, bb.input_h, bb.input_w);

  const fs::path dir = prepare_output(o);
  {
    std::ofstream f(dir / "config.txt");
    f << format_train_config(config);
  }
  TrainOptions opts;
  opts.checkpoint_path = dir / "best.ckpt";
  opts.log_path = dir / "train_log.csv";
  opts.on_epoch = [&](const EpochRecord& e) {
    out << "epoch " << e.epoch + 1 << "/" << config.epochs << "  lr " << e.lr << "  " << val_split << "_auc "
        << e.validation_auc << (e.improved ? "  (saved)" : "") << "\n";
  };
  const TrainResult r = train(config, train_set, val_set, opts);
  out << "best " << val_split << " AUC " << r.best_validation_auc << " at epoch " << r.best_epoch + 1 << "\n"
      << "checkpoint: " << opts.checkpoint_path.string() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const LoadedModel m = open_checkpoint(o);
  require_exists(o.data_root, "data root");
  const auto& bb = m.config.backbone;
  const Dataset test = load_dataset(o.data_root, "test", bb.input_h, bb.input_w);
  const EvalResult r = evaluate(*m.model, test, m.config.eval_batch_size);
  const fs::path dir = prepare_output(o);
  std::ofstream f(dir / "metrics.csv");
  f << MetricsReport::csv_header() << "\n" << r.report.csv_row() << "\n";
  out << r.report.table();
  return kExitOk;
}

int cmd_robustness(const Options& o, std::ostream& out) {
  const LoadedModel m = open_checkpoint(o);
  require_exists(o.data_root, "data root");
  const auto& bb = m.config.backbone;
  const Dataset test = load_dataset(o.data_root, "test", bb.input_h, bb.input_w);
  const fs::path dir = prepare_output(o);
  std::ofstream f(dir / "robustness.csv");
  f << "kind,severity,auc,eer,acc\n";
  out << "kind               sev     AUC     EER     ACC\n";
  // Severity 0 is the identity for every kind, so the clean scores serve all rows.
  const MetricsReport clean = evaluate(*m.model, test, m.config.eval_batch_size).report;
  char line[160];
  for (PerturbationKind kind : kAllPerturbations) {
    for (int s = 0; s <= o.severity_max; ++s) {
      const MetricsReport r =
          s == 0 ? clean : evaluate(*m.model, test, m.config.eval_batch_size, PerturbationSpec{kind, s}).report;
      std::snprintf(line, sizeof line, "%s,%d,%.17g,%.17g,%.17g\n", to_string(kind).c_str(), s, r.auc, r.eer, r.acc);
      f << line;
      std::snprintf(line, sizeof line, "%-18s %3d  %.4f  %.4f  %.4f\n", to_string(kind).c_str(), s, r.auc, r.eer, r.acc);
      out << line;
    }
  }
  return kExitOk;
}

int cmd_viz_recon(const Options& o, std::ostream& out) {
  const LoadedModel m = open_checkpoint(o);
  require_exists(o.data_root, "data root");
  const auto images = collect_images(o.data_root, m.config.backbone);
  const fs::path dir = prepare_output(o);
  for (const auto& img : images) write_png(dir / ("recon_" + img.name + ".png"), compose_recon_row(recon_panels(*m.model, img.image)));
  out << "wrote " << images.size() << " reconstruction rows to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_gradcam(const Options& o, std::ostream& out) {
  LoadedModel m = open_checkpoint(o);
  require_exists(o.data_root, "data root");
  const auto images = collect_images(o.data_root, m.config.backbone);
  const fs::path dir = prepare_output(o);
  for (const auto& img : images) {
    write_png(dir / ("gradcam_" + img.name + ".png"), overlay_heatmap(img.image, gradcam(*m.model, img.image)));
  }
  out << "wrote " << images.size() << " heatmaps to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_make_data(const Options& o, std::ostream& out) {
  SyntheticConfig cfg;
  cfg.image_size = o.image_size;
  cfg.seed = o.seed.value_or(0);
  if (!o.kinds.empty()) {
    cfg.tamper_kinds.clear();
    for (const auto& k : o.kinds) cfg.tamper_kinds.push_back(parse_tamper_kind(k));
  }
  const fs::path dir = prepare_output(o);
  materialize_synthetic(dir, cfg, o.train_pairs, o.test_pairs);
  out << "wrote " << 2 * o.train_pairs << " train and " << 2 * o.test_pairs << " test images to " << dir.string()
      << "\n";
  return kExitOk;
}

const std::vector<std::string> kAblationNames{"baseline", "rec1", "rec2", "double", "no-dea", "no-rfa", "full"};

// Required options are checked after parsing so that an unknown flag is
// reported ahead of a missing one.
struct RequiredOptions {
  std::vector<std::pair<const CLI::App*, const CLI::Option*>> entries;

  CLI::Option* add(CLI::App* app, const std::string& name, std::string& target, const std::string& help) {
    CLI::Option* opt = app->add_option(name, target, help + " (required)");
    entries.emplace_back(app, opt);
    return opt;
  }
  void check() const {
    for (const auto& [app, opt] : entries) {
      if (app->parsed() && opt->count() == 0) throw CLI::RequiredError(opt->get_name());
    }
  }
};

void add_checkpoint(CLI::App* app, Options& o, RequiredOptions& req) {
  req.add(app, "--checkpoint", o.checkpoint, "Model checkpoint written by train");
}
void add_data_root(CLI::App* app, Options& o, RequiredOptions& req) {
  req.add(app, "--data-root", o.data_root, "Dataset root with <split>/{real,fake}/ images");
}
void add_output_dir(CLI::App* app, Options& o, RequiredOptions& req) {
  req.add(app, "--output-dir", o.output_dir, "Directory for outputs; created if absent");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image forgery detection by reconstruction discrepancy", "forgerecon"};
  app.require_subcommand(1);
  Options o;
  RequiredOptions req;

  auto* train = app.add_subcommand("train", "Train a model and keep the best-validation checkpoint");
  train->add_option("--config", o.config, "Training config file (key = value)");
  add_data_root(train, o, req);
  add_output_dir(train, o, req);
  train->add_option("--seed", o.seed, "Override the config seed");
  train->add_option("--ablation", o.ablation, "Override the model variant")->check(CLI::IsMember(kAblationNames));

  auto* eval = app.add_subcommand("eval", "Score the test split and report ACC, AUC and EER");
  add_checkpoint(eval, o, req);
  add_data_root(eval, o, req);
  add_output_dir(eval, o, req);

  auto* robust = app.add_subcommand("robustness", "Evaluate the test split under graded distortions");
  add_checkpoint(robust, o, req);
  add_data_root(robust, o, req);
  add_output_dir(robust, o, req);
  robust->add_option("--severity-max", o.severity_max, "Highest severity level")
      ->check(CLI::Range(0, kMaxSeverity))
      ->capture_default_str();

  auto* viz = app.add_subcommand("viz-recon", "Write input, reconstruction and difference panels per image");
  add_checkpoint(viz, o, req);
  add_data_root(viz, o, req);
  add_output_dir(viz, o, req);

  auto* cam = app.add_subcommand("gradcam", "Write fake-class activation heatmaps per image");
  add_checkpoint(cam, o, req);
  add_data_root(cam, o, req);
  add_output_dir(cam, o, req);

  auto* make = app.add_subcommand("make-data", "Materialise a synthetic forgery dataset as PNG files");
  add_output_dir(make, o, req);
  make->add_option("--seed", o.seed, "Generator seed");
  make->add_option("--train-pairs", o.train_pairs, "Real/fake pairs in the train split")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  make->add_option("--test-pairs", o.test_pairs, "Real/fake pairs in the test split")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  make->add_option("--image-size", o.image_size, "Side length in pixels")->check(CLI::PositiveNumber)->capture_default_str();
  make->add_option("--kinds", o.kinds, "Tamper kinds: splice, local_blur, local_noise, color_transplant")
      ->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    req.check();
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitValidation;
  }

  try {
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*robust) return cmd_robustness(o, out);
    if (*viz) return cmd_viz_recon(o, out);
    if (*cam) return cmd_gradcam(o, out);
    return cmd_make_data(o, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DatasetError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace forgerecon::cli
