#include "fsr/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fsr/checkpoint.hpp"
#include "fsr/error.hpp"
#include "fsr/rng.hpp"

namespace fs = std::filesystem;

namespace fsr {

namespace {

// Stream tags for deriving independent RNG streams from the master seed.
constexpr std::uint64_t kInitStream = 0x494e4954;   // weight init
constexpr std::uint64_t kBatchStream = 0x42415443;  // batch sampling
constexpr std::uint64_t kDropStream = 0x44524f50;   // dropout

std::uint64_t dropout_seed(std::uint64_t seed, int epoch, int step, int item) {
  std::uint64_t s = mix_seed(seed, kDropStream);
  s = mix_seed(s, static_cast<std::uint64_t>(epoch));
  s = mix_seed(s, static_cast<std::uint64_t>(step));
  return mix_seed(s, static_cast<std::uint64_t>(item));
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ArgumentError("TrainConfig: epochs must be >= 0");
  if (steps_per_epoch < 1) throw ArgumentError("TrainConfig: steps_per_epoch must be >= 1");
  if (batch_size < 1) throw ArgumentError("TrainConfig: batch_size must be >= 1");
  if (scale_percent < 1 || scale_percent > 100)
    throw ArgumentError("TrainConfig: scale_percent must be in [1, 100]");
  if (image_size < 4 || image_size % 4 != 0)
    throw ArgumentError("TrainConfig: image_size must be a positive multiple of 4");
  if (!(lr > 0.0)) throw ArgumentError("TrainConfig: lr must be positive");
  if (threads < 0) throw ArgumentError("TrainConfig: threads must be >= 0");
}

DatasetIndex::DatasetIndex(std::vector<std::string> paths) : paths_(std::move(paths)) {
  std::sort(paths_.begin(), paths_.end());
}

const ImageTensor& DatasetIndex::hr_image(std::size_t i, int image_size) const {
  if (image_size != cached_size_) {
    cache_.clear();
    cached_size_ = image_size;
  }
  const std::string& path = paths_.at(i);
  auto it = cache_.find(path);
  if (it == cache_.end()) {
    ImageTensor img = load_image(path);
    if (img.height != image_size || img.width != image_size)
      img = resize_bilinear(img, image_size, image_size);
    it = cache_.emplace(path, std::move(img)).first;
  }
  return it->second;
}

DatasetIndex index_dataset(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw IoError("dataset directory '" + dir + "' does not exist");

  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png") paths.push_back(entry.path().string());
  }
  if (paths.empty()) throw IoError("dataset directory '" + dir + "' contains no PNG files");
  return DatasetIndex(std::move(paths));
}

Batch batch_generate(const DatasetIndex& index, const TrainConfig& cfg, Rng& rng) {
  if (index.size() == 0) throw ArgumentError("batch_generate: empty dataset index");

  Batch batch;
  batch.hr = Tensor4(cfg.batch_size, cfg.image_size, cfg.image_size, 3);
  batch.lr = Tensor4(cfg.batch_size, cfg.image_size, cfg.image_size, 3);
  const std::size_t item_len = static_cast<std::size_t>(cfg.image_size) * cfg.image_size * 3;

  for (int i = 0; i < cfg.batch_size; ++i) {
    const std::size_t pick = rng.index(index.size());
    const ImageTensor& hr = index.hr_image(pick, cfg.image_size);
    const ImageTensor lr = degrade(hr, cfg.scale_percent);
    std::copy(hr.data.begin(), hr.data.end(), batch.hr.data.begin() + i * item_len);
    std::copy(lr.data.begin(), lr.data.end(), batch.lr.data.begin() + i * item_len);
  }
  return batch;
}

void LossLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write loss log '" + path + "'");
  out << "epoch,mean_loss,lr\n";
  char line[128];
  for (const auto& e : entries) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.10g\n", e.epoch, e.mean_loss, e.lr);
    out << line;
  }
  if (!out) throw IoError("write failed for loss log '" + path + "'");
}

namespace {

struct ItemResult {
  double sum_sq = 0.0;  // sum of squared residuals for the item
  ParameterGradients grads;
};

// Forward/backward for one batch item. Loss gradients are scaled by the
// whole-batch element count so that summing per-item parameter gradients
// reproduces the batch-MSE gradient.
ItemResult train_item(const UNetModel& model, const Tensor4& lr_item, const Tensor4& hr_item,
                      std::size_t batch_numel, std::uint64_t drop_seed) {
  UNetForwardResult fwd = unet_forward(model, lr_item, /*train_mode=*/true, drop_seed);

  Tensor4 grad(fwd.output.n, fwd.output.h, fwd.output.w, fwd.output.c);
  double sum_sq = 0.0;
  const double scale = 2.0 / static_cast<double>(batch_numel);
  for (std::size_t i = 0; i < fwd.output.numel(); ++i) {
    const double d = static_cast<double>(fwd.output.data[i]) - hr_item.data[i];
    sum_sq += d * d;
    grad.data[i] = static_cast<float>(scale * d);
  }

  ItemResult r;
  r.sum_sq = sum_sq;
  r.grads = unet_backward(model, fwd.tape, grad);
  return r;
}

}  // namespace

FitResult fit(const TrainConfig& cfg, const std::function<void(const LossLog::Entry&)>& on_epoch) {
  cfg.validate();
  DatasetIndex index = index_dataset(cfg.dataset_dir);

  UNetConfig net_cfg;
  net_cfg.base_channels = cfg.base_channels;
  net_cfg.mid_channels = cfg.mid_channels;
  net_cfg.dropout_rate = cfg.dropout_rate;

  FitResult result{UNetModel(net_cfg), AdamState{}, LossLog{}};
  result.model.init_parameters(mix_seed(cfg.seed, kInitStream));
  result.state = AdamState::init_for(result.model, cfg.lr);

  Rng batch_rng(mix_seed(cfg.seed, kBatchStream));
  PlateauScheduler sched;

  int worker_count = cfg.threads > 0 ? cfg.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
  worker_count = std::max(1, std::min(worker_count, cfg.batch_size));

  if (!cfg.checkpoint_dir.empty()) fs::create_directories(cfg.checkpoint_dir);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_loss_sum = 0.0;

    for (int step = 1; step <= cfg.steps_per_epoch; ++step) {
      const Batch batch = batch_generate(index, cfg, batch_rng);
      const std::size_t batch_numel = batch.hr.numel();

      // Per-item forward/backward, possibly on worker threads. Gradients are
      // reduced in item order, so the result is thread-count independent.
      std::vector<ItemResult> items(cfg.batch_size);
      auto run_item = [&](int i) {
        items[i] = train_item(result.model, batch.lr.slice(i), batch.hr.slice(i), batch_numel,
                              dropout_seed(cfg.seed, epoch, step, i));
      };
      if (worker_count == 1) {
        for (int i = 0; i < cfg.batch_size; ++i) run_item(i);
      } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < worker_count; ++t)
          pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < cfg.batch_size; i = next.fetch_add(1)) run_item(i);
          });
        for (auto& th : pool) th.join();
      }

      double sum_sq = 0.0;
      for (const auto& item : items) sum_sq += item.sum_sq;
      const double loss = sum_sq / static_cast<double>(batch_numel);
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(step));
      epoch_loss_sum += loss;

      ParameterGradients total = std::move(items[0].grads);
      for (int i = 1; i < cfg.batch_size; ++i)
        for (std::size_t p = 0; p < total.size(); ++p) {
          const auto& g = items[i].grads[p];
          for (std::size_t j = 0; j < g.size(); ++j) total[p][j] += g[j];
        }

      adam_step(result.model, total, result.state);
    }

    LossLog::Entry entry{epoch, epoch_loss_sum / cfg.steps_per_epoch, result.state.lr};
    result.log.entries.push_back(entry);
    result.state.lr = scheduler_step(sched, entry.mean_loss, result.state.lr);

    if (!cfg.checkpoint_dir.empty()) {
      const std::string path =
          (fs::path(cfg.checkpoint_dir) / ("ckpt_epoch_" + std::to_string(epoch) + ".fsr"))
              .string();
      checkpoint_save(result.model, result.state, path);
    }
    if (on_epoch) on_epoch(entry);
  }

  if (!cfg.loss_log_path.empty()) result.log.write_csv(cfg.loss_log_path);
  return result;
}

}  // namespace fsr
