// fsr — foreground super-resolution toolkit CLI.
//
// Subcommands: degrade, train, infer, composite, eval, metrics.
// Exit codes: 0 success, 1 I/O error, 2 argument error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsr/checkpoint.hpp"
#include "fsr/error.hpp"
#include "fsr/evaluation.hpp"
#include "fsr/image.hpp"
#include "fsr/metrics.hpp"
#include "fsr/pipeline.hpp"
#include "fsr/training.hpp"
#include "fsr/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Echoes every effective value before a subcommand runs; the experiment can
// be reproduced from this line alone.
void echo_header(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::cerr << "[fsr] version=" << fsr::kVersion << " cmd=" << cmd;
  for (const auto& [k, v] : kv) std::cerr << ' ' << k << '=' << v;
  std::cerr << '\n';
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

fsr::PsnrVariant parse_psnr_variant(const std::string& s) {
  if (s == "paper") return fsr::PsnrVariant::paper;
  if (s == "standard") return fsr::PsnrVariant::standard;
  throw fsr::ArgumentError("unknown PSNR variant '" + s + "' (paper|standard)");
}

fsr::StatMode parse_stat_mode(const std::string& s) {
  if (s == "global") return fsr::StatMode::global;
  if (s == "windowed") return fsr::StatMode::windowed;
  throw fsr::ArgumentError("unknown statistics mode '" + s + "' (global|windowed)");
}

// ---------------------------------------------------------------- degrade

struct DegradeArgs {
  std::string in, out;
  int scale = 50;
};

int cmd_degrade(const DegradeArgs& a) {
  echo_header("degrade", {{"in", a.in}, {"out", a.out}, {"scale", std::to_string(a.scale)}});
  const fsr::ImageTensor img = fsr::load_image(a.in);
  fsr::save_image(fsr::degrade(img, a.scale), a.out);
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string config_path;
  fsr::TrainConfig flags;      // values provided on the command line
  std::map<std::string, bool> given;  // which flags were provided
};

fsr::TrainConfig resolve_train_config(const TrainArgs& a) {
  fsr::TrainConfig cfg;  // compiled defaults

  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw fsr::IoError("cannot open config '" + a.config_path + "'");
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw fsr::ArgumentError("malformed JSON config '" + a.config_path + "': " + e.what());
    }
    auto get = [&doc](const char* key, auto& slot) {
      if (doc.contains(key)) slot = doc[key].get<std::decay_t<decltype(slot)>>();
    };
    get("epochs", cfg.epochs);
    get("steps_per_epoch", cfg.steps_per_epoch);
    get("batch_size", cfg.batch_size);
    get("scale_percent", cfg.scale_percent);
    get("lr", cfg.lr);
    get("seed", cfg.seed);
    get("image_size", cfg.image_size);
    get("dataset_dir", cfg.dataset_dir);
    get("checkpoint_dir", cfg.checkpoint_dir);
    get("loss_log_path", cfg.loss_log_path);
    get("base_channels", cfg.base_channels);
    get("mid_channels", cfg.mid_channels);
    get("dropout_rate", cfg.dropout_rate);
    get("threads", cfg.threads);
  }

  // Flags win over the config file.
  auto won = [&a](const char* key) { return a.given.count(key) && a.given.at(key); };
  if (won("epochs")) cfg.epochs = a.flags.epochs;
  if (won("steps")) cfg.steps_per_epoch = a.flags.steps_per_epoch;
  if (won("batch")) cfg.batch_size = a.flags.batch_size;
  if (won("scale")) cfg.scale_percent = a.flags.scale_percent;
  if (won("lr")) cfg.lr = a.flags.lr;
  if (won("seed")) cfg.seed = a.flags.seed;
  if (won("image-size")) cfg.image_size = a.flags.image_size;
  if (won("dataset")) cfg.dataset_dir = a.flags.dataset_dir;
  if (won("ckpt-dir")) cfg.checkpoint_dir = a.flags.checkpoint_dir;
  if (won("loss-log")) cfg.loss_log_path = a.flags.loss_log_path;
  if (won("base-channels")) cfg.base_channels = a.flags.base_channels;
  if (won("mid-channels")) cfg.mid_channels = a.flags.mid_channels;
  if (won("dropout")) cfg.dropout_rate = a.flags.dropout_rate;
  if (won("threads")) cfg.threads = a.flags.threads;
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const fsr::TrainConfig cfg = resolve_train_config(a);
  cfg.validate();
  if (cfg.dataset_dir.empty()) throw fsr::ArgumentError("train: --dataset (or config) is required");

  echo_header("train", {{"dataset", cfg.dataset_dir},
                        {"epochs", std::to_string(cfg.epochs)},
                        {"steps_per_epoch", std::to_string(cfg.steps_per_epoch)},
                        {"batch_size", std::to_string(cfg.batch_size)},
                        {"scale_percent", std::to_string(cfg.scale_percent)},
                        {"lr", std::to_string(cfg.lr)},
                        {"seed", std::to_string(cfg.seed)},
                        {"image_size", std::to_string(cfg.image_size)},
                        {"base_channels", std::to_string(cfg.base_channels)},
                        {"mid_channels", std::to_string(cfg.mid_channels)},
                        {"dropout_rate", std::to_string(cfg.dropout_rate)},
                        {"threads", std::to_string(cfg.threads)},
                        {"ckpt_dir", cfg.checkpoint_dir},
                        {"loss_log", cfg.loss_log_path}});

  fsr::fit(cfg, [](const fsr::LossLog::Entry& e) {
    std::cerr << "[fsr] epoch " << e.epoch << " mean_loss=" << fixed6(e.mean_loss)
              << " lr=" << e.lr << '\n';
  });
  return 0;
}

// ------------------------------------------------------------------ infer

struct InferArgs {
  std::string checkpoint, in, out;
  std::vector<std::string> mask_paths;
  double feather = 2.0;
  std::string mode = "masked";
};

int cmd_infer(const InferArgs& a) {
  echo_header("infer", {{"checkpoint", a.checkpoint},
                        {"in", a.in},
                        {"out", a.out},
                        {"masks", std::to_string(a.mask_paths.size())},
                        {"feather", std::to_string(a.feather)},
                        {"mode", a.mode}});

  fsr::SrInputMode mode;
  if (a.mode == "masked") mode = fsr::SrInputMode::masked;
  else if (a.mode == "full") mode = fsr::SrInputMode::full;
  else throw fsr::ArgumentError("unknown SR input mode '" + a.mode + "' (masked|full)");

  const fsr::Checkpoint ckpt = fsr::checkpoint_load(a.checkpoint);
  const fsr::ImageTensor lr = fsr::load_image(a.in);

  std::vector<fsr::Mask> masks;
  for (const auto& p : a.mask_paths) masks.push_back(fsr::load_mask(p));
  if (masks.empty())
    masks.push_back(fsr::Mask(lr.height, lr.width, 1));  // no mask = whole frame

  fsr::save_image(fsr::run_pipeline(ckpt.model, lr, masks, a.feather, mode), a.out);
  return 0;
}

// -------------------------------------------------------------- composite

struct CompositeArgs {
  std::string sr, lr, out;
  std::vector<std::string> mask_paths;
  double feather = 0.0;
};

int cmd_composite(const CompositeArgs& a) {
  echo_header("composite", {{"sr", a.sr},
                            {"lr", a.lr},
                            {"out", a.out},
                            {"masks", std::to_string(a.mask_paths.size())},
                            {"feather", std::to_string(a.feather)}});

  const fsr::ImageTensor sr = fsr::load_image(a.sr);
  const fsr::ImageTensor lr = fsr::load_image(a.lr);
  std::vector<fsr::Mask> masks;
  for (const auto& p : a.mask_paths) masks.push_back(fsr::load_mask(p));
  if (masks.empty()) throw fsr::ArgumentError("composite: at least one --mask is required");

  const fsr::AlphaMatte alpha = fsr::feather_mask(fsr::combine_masks(masks), a.feather);
  fsr::save_image(fsr::composite(sr, lr, alpha), a.out);
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string lr_dir, hr_dir, out_dir, mask_dir;
  std::string region = "full";
  std::string metrics = "mse,psnr,ssim,uqi";
  std::string report, format = "csv";
  std::string psnr_variant = "paper";
  std::string ssim_mode = "windowed";
  std::string uqi_mode = "windowed";
  int jobs = 1;
};

std::vector<fsr::MetricKind> parse_metric_list(const std::string& csv) {
  std::vector<fsr::MetricKind> kinds;
  std::string token;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!token.empty()) kinds.push_back(fsr::metric_kind_from_name(token));
      token.clear();
    } else {
      token += ch;
    }
  }
  return kinds;
}

std::vector<fsr::Mask> find_instance_masks(const std::string& mask_dir, const std::string& stem) {
  // Convention: <stem>.mask.png plus numbered instances <stem>.mask.<k>.png.
  std::vector<fsr::Mask> masks;
  const fs::path base = fs::path(mask_dir) / (stem + ".mask.png");
  if (fs::exists(base)) masks.push_back(fsr::load_mask(base.string()));
  for (int k = 0;; ++k) {
    const fs::path inst = fs::path(mask_dir) / (stem + ".mask." + std::to_string(k) + ".png");
    if (!fs::exists(inst)) break;
    masks.push_back(fsr::load_mask(inst.string()));
  }
  return masks;
}

int cmd_eval(const EvalArgs& a) {
  echo_header("eval", {{"lr_dir", a.lr_dir},
                       {"hr_dir", a.hr_dir},
                       {"out_dir", a.out_dir},
                       {"mask_dir", a.mask_dir},
                       {"region", a.region},
                       {"metrics", a.metrics},
                       {"report", a.report},
                       {"format", a.format},
                       {"psnr_variant", a.psnr_variant},
                       {"ssim_mode", a.ssim_mode},
                       {"uqi_mode", a.uqi_mode},
                       {"jobs", std::to_string(a.jobs)}});

  fsr::EvalRegion region;
  if (a.region == "full") region = fsr::EvalRegion::full;
  else if (a.region == "foreground") region = fsr::EvalRegion::foreground;
  else throw fsr::ArgumentError("unknown region '" + a.region + "' (full|foreground)");

  fsr::MetricOptions options;
  options.psnr_variant = parse_psnr_variant(a.psnr_variant);
  options.ssim.mode = parse_stat_mode(a.ssim_mode);
  options.uqi_mode = parse_stat_mode(a.uqi_mode);

  std::error_code ec;
  if (!fs::is_directory(a.lr_dir, ec)) throw fsr::IoError("not a directory: '" + a.lr_dir + "'");

  std::vector<fsr::EvalItem> items;
  std::vector<fs::path> lr_files;
  for (const auto& entry : fs::directory_iterator(a.lr_dir))
    if (entry.path().extension() == ".png") lr_files.push_back(entry.path());
  std::sort(lr_files.begin(), lr_files.end());

  for (const auto& lr_path : lr_files) {
    const std::string name = lr_path.filename().string();
    const std::string stem = lr_path.stem().string();
    const fs::path hr_path = fs::path(a.hr_dir) / name;
    const fs::path out_path = fs::path(a.out_dir) / name;
    if (!fs::exists(hr_path) || !fs::exists(out_path)) {
      std::cerr << "[fsr] warning: no HR/OUT counterpart for " << name << ", skipping\n";
      continue;
    }
    fsr::EvalItem item;
    item.id = stem;
    item.lr = fsr::load_image(lr_path.string());
    item.hr = fsr::load_image(hr_path.string());
    item.out = fsr::load_image(out_path.string());
    if (!a.mask_dir.empty()) {
      auto masks = find_instance_masks(a.mask_dir, stem);
      if (!masks.empty()) item.mask = fsr::combine_masks(masks);
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw fsr::IoError("eval: no (lr, hr, out) triples found");

  const fsr::EvalResult result =
      fsr::evaluate_batch(std::move(items), parse_metric_list(a.metrics), region, options, a.jobs);

  for (const auto& [kind, agg] : result.summary.per_metric)
    std::cout << fsr::metric_kind_name(kind) << " mean_percent_increase "
              << fixed6(agg.mean_percent_increase) << " over " << agg.count << " images ("
              << agg.skipped << " skipped)\n";

  if (!a.report.empty()) {
    const fsr::ReportFormat fmt =
        a.format == "json" ? fsr::ReportFormat::json : fsr::ReportFormat::csv;
    if (a.format != "json" && a.format != "csv")
      throw fsr::ArgumentError("unknown report format '" + a.format + "' (csv|json)");
    fsr::emit_report(result, a.report, fmt);
  }
  return 0;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string a, b, metric = "ssim";
  std::string psnr_variant = "paper";
  std::string mode = "windowed";
  int uqi_window = 8;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
};

int cmd_metrics(const MetricsArgs& a) {
  echo_header("metrics", {{"a", a.a},
                          {"b", a.b},
                          {"metric", a.metric},
                          {"psnr_variant", a.psnr_variant},
                          {"mode", a.mode}});

  const fsr::ImageTensor x = fsr::load_image(a.a);
  const fsr::ImageTensor y = fsr::load_image(a.b);
  const fsr::MetricKind kind = fsr::metric_kind_from_name(a.metric);

  double value = 0.0;
  switch (kind) {
    case fsr::MetricKind::mse: value = fsr::mse(x, y); break;
    case fsr::MetricKind::psnr: value = fsr::psnr(x, y, parse_psnr_variant(a.psnr_variant)); break;
    case fsr::MetricKind::ssim: {
      fsr::SsimParams params;
      params.mode = parse_stat_mode(a.mode);
      params.window_size = a.ssim_window;
      params.window_sigma = a.ssim_sigma;
      value = fsr::ssim(x, y, params);
      break;
    }
    case fsr::MetricKind::uqi:
      value = fsr::uqi(x, y, parse_stat_mode(a.mode), a.uqi_window);
      break;
  }
  std::cout << fixed6(value) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fsr — localized foreground super-resolution toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fsr::kVersion));

  DegradeArgs degrade_args;
  auto* degrade_cmd = app.add_subcommand("degrade", "Generate an LR image from an HR image");
  degrade_cmd->add_option("--in", degrade_args.in, "Input PNG")->required();
  degrade_cmd->add_option("--out", degrade_args.out, "Output PNG")->required();
  degrade_cmd->add_option("--scale", degrade_args.scale, "Downscale percent (default 50)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the SR model");
  train_cmd->add_option("--config", train_args.config_path, "JSON config file");
  train_cmd->add_option("--dataset", train_args.flags.dataset_dir, "Directory of training PNGs");
  train_cmd->add_option("--epochs", train_args.flags.epochs, "Training epochs");
  train_cmd->add_option("--steps", train_args.flags.steps_per_epoch, "Optimizer steps per epoch");
  train_cmd->add_option("--batch", train_args.flags.batch_size, "Batch size");
  train_cmd->add_option("--scale", train_args.flags.scale_percent, "LR degradation percent");
  train_cmd->add_option("--lr", train_args.flags.lr, "Adam learning rate");
  train_cmd->add_option("--seed", train_args.flags.seed, "Master seed");
  train_cmd->add_option("--image-size", train_args.flags.image_size, "Square training size");
  train_cmd->add_option("--ckpt-dir", train_args.flags.checkpoint_dir, "Checkpoint directory");
  train_cmd->add_option("--loss-log", train_args.flags.loss_log_path, "Loss CSV path");
  train_cmd->add_option("--base-channels", train_args.flags.base_channels, "First-level width");
  train_cmd->add_option("--mid-channels", train_args.flags.mid_channels, "Second-level width");
  train_cmd->add_option("--dropout", train_args.flags.dropout_rate, "Dropout rate");
  train_cmd->add_option("--threads", train_args.flags.threads, "Worker threads (0 = auto)");

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "Run foreground SR on one image");
  infer_cmd->add_option("--checkpoint", infer_args.checkpoint, "Model checkpoint")->required();
  infer_cmd->add_option("--in", infer_args.in, "LR input PNG")->required();
  infer_cmd->add_option("--out", infer_args.out, "Output PNG")->required();
  infer_cmd->add_option("--mask", infer_args.mask_paths, "Mask PNG (repeatable)");
  infer_cmd->add_option("--feather", infer_args.feather, "Feather radius in pixels (default 2)");
  infer_cmd->add_option("--mode", infer_args.mode, "SR input: masked|full (default masked)");

  CompositeArgs composite_args;
  auto* composite_cmd = app.add_subcommand("composite", "Blend an SR foreground over an LR image");
  composite_cmd->add_option("--sr", composite_args.sr, "SR PNG")->required();
  composite_cmd->add_option("--lr", composite_args.lr, "LR PNG")->required();
  composite_cmd->add_option("--out", composite_args.out, "Output PNG")->required();
  composite_cmd->add_option("--mask", composite_args.mask_paths, "Mask PNG (repeatable)");
  composite_cmd->add_option("--feather", composite_args.feather, "Feather radius (default 0)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Batch metric evaluation (percent increases)");
  eval_cmd->add_option("--lr-dir", eval_args.lr_dir, "LR images")->required();
  eval_cmd->add_option("--hr-dir", eval_args.hr_dir, "HR references")->required();
  eval_cmd->add_option("--out-dir", eval_args.out_dir, "Model outputs")->required();
  eval_cmd->add_option("--mask-dir", eval_args.mask_dir, "Masks (<stem>.mask[.k].png)");
  eval_cmd->add_option("--region", eval_args.region, "full|foreground (default full)");
  eval_cmd->add_option("--metrics", eval_args.metrics, "Comma list (default mse,psnr,ssim,uqi)");
  eval_cmd->add_option("--report", eval_args.report, "Report output path");
  eval_cmd->add_option("--format", eval_args.format, "csv|json (default csv)");
  eval_cmd->add_option("--psnr-variant", eval_args.psnr_variant, "paper|standard");
  eval_cmd->add_option("--ssim-mode", eval_args.ssim_mode, "windowed|global");
  eval_cmd->add_option("--uqi-mode", eval_args.uqi_mode, "windowed|global");
  eval_cmd->add_option("--jobs", eval_args.jobs, "Parallel image workers");

  MetricsArgs metrics_args;
  auto* metrics_cmd = app.add_subcommand("metrics", "Print one metric for an image pair");
  metrics_cmd->add_option("--a", metrics_args.a, "First PNG")->required();
  metrics_cmd->add_option("--b", metrics_args.b, "Second PNG")->required();
  metrics_cmd->add_option("--metric", metrics_args.metric, "mse|psnr|ssim|uqi (default ssim)");
  metrics_cmd->add_option("--variant", metrics_args.psnr_variant, "PSNR: paper|standard");
  metrics_cmd->add_option("--mode", metrics_args.mode, "SSIM/UQI: windowed|global");
  metrics_cmd->add_option("--window", metrics_args.uqi_window, "UQI window (default 8)");
  metrics_cmd->add_option("--ssim-window", metrics_args.ssim_window, "SSIM window (default 11)");
  metrics_cmd->add_option("--ssim-sigma", metrics_args.ssim_sigma, "SSIM sigma (default 1.5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (degrade_cmd->parsed()) return cmd_degrade(degrade_args);
    if (train_cmd->parsed()) {
      for (const char* flag : {"dataset", "epochs", "steps", "batch", "scale", "lr", "seed",
                               "image-size", "ckpt-dir", "loss-log", "base-channels",
                               "mid-channels", "dropout", "threads"})
        train_args.given[flag] = train_cmd->count(std::string("--") + flag) > 0;
      return cmd_train(train_args);
    }
    if (infer_cmd->parsed()) return cmd_infer(infer_args);
    if (composite_cmd->parsed()) return cmd_composite(composite_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (metrics_cmd->parsed()) return cmd_metrics(metrics_args);
  } catch (const fsr::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fsr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fsr::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
