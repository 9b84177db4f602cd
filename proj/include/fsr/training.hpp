#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsr/image.hpp"
#include "fsr/optim.hpp"
#include "fsr/tensor.hpp"
#include "fsr/unet.hpp"

namespace fsr {
class Rng;

struct TrainConfig {
  int epochs = 40;
  int steps_per_epoch = 20;
  int batch_size = 10;
  int scale_percent = 50;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  int image_size = 256;  // must be divisible by 4
  std::string dataset_dir;
  std::string checkpoint_dir;
  std::string loss_log_path;

  // Network plan; defaults match the stock model.
  int base_channels = 32;
  int mid_channels = 64;
  float dropout_rate = 0.25f;

  // Worker threads for per-item forward/backward. 0 = hardware default.
  // Results are bit-identical regardless of the thread count.
  int threads = 0;

  void validate() const;
};

/// Sorted, deterministic list of dataset image paths, with a decoded-image
/// cache keyed by path (resized HR at the configured size).
class DatasetIndex {
 public:
  explicit DatasetIndex(std::vector<std::string> paths);

  std::size_t size() const { return paths_.size(); }
  const std::vector<std::string>& paths() const { return paths_; }

  /// Decoded and resized HR image for entry i; cached.
  const ImageTensor& hr_image(std::size_t i, int image_size) const;

 private:
  std::vector<std::string> paths_;
  mutable std::unordered_map<std::string, ImageTensor> cache_;
  mutable int cached_size_ = -1;
};

/// Scans `dir` for *.png files. Throws on empty result.
DatasetIndex index_dataset(const std::string& dir);

struct Batch {
  Tensor4 lr;  // degraded inputs
  Tensor4 hr;  // targets
};

/// Samples batch_size paths uniformly with replacement, resizes each image
/// to image_size^2 (HR) and degrades it at scale_percent (LR).
Batch batch_generate(const DatasetIndex& index, const TrainConfig& cfg, Rng& rng);

struct LossLog {
  struct Entry {
    int epoch;         // 1-based
    double mean_loss;  // arithmetic mean of the step losses
    double lr;         // learning rate in effect during the epoch
  };
  std::vector<Entry> entries;

  /// CSV `epoch,mean_loss,lr`, one row per epoch, header always present.
  void write_csv(const std::string& path) const;
};

struct FitResult {
  UNetModel model;
  AdamState state;
  LossLog log;
};

/// The full training protocol: epochs x steps_per_epoch Adam steps on MSE
/// loss, per-epoch loss logging, plateau scheduling and checkpointing
/// (ckpt_epoch_{e}.fsr when checkpoint_dir is set). Identical seeds give
/// bit-identical results in any thread configuration.
FitResult fit(const TrainConfig& cfg,
              const std::function<void(const LossLog::Entry&)>& on_epoch = nullptr);

}  // namespace fsr
