#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsr/image.hpp"
#include "fsr/metrics.hpp"

namespace fsr {

enum class EvalRegion { full, foreground };

std::string eval_region_name(EvalRegion region);

/// Options shared by every metric evaluation in a batch.
struct MetricOptions {
  PsnrVariant psnr_variant = PsnrVariant::paper;
  SsimParams ssim;
  StatMode uqi_mode = StatMode::windowed;
  int uqi_window = 8;
};

/// One (image, metric) evaluation: baseline = metric(LR, HR), output =
/// metric(OUT, HR), percent increase between them.
struct EvalRecord {
  std::string image;
  MetricKind metric;
  EvalRegion region;
  double baseline;
  double output;
  double percent_increase;
};

struct EvalSummary {
  struct MetricAggregate {
    double mean_percent_increase = 0.0;
    double mean_baseline = 0.0;
    double mean_output = 0.0;
    int count = 0;    // records included in the means
    int skipped = 0;  // zero-baseline / degenerate images, excluded
  };
  std::map<MetricKind, MetricAggregate> per_metric;
  EvalRegion region = EvalRegion::full;
  int record_count = 0;
};

/// (output - baseline) / baseline * 100. Throws NumericError on zero baseline.
double percent_increase(double baseline, double output);

struct EvalItem {
  std::string id;
  ImageTensor lr;
  ImageTensor hr;
  ImageTensor out;
  std::optional<Mask> mask;  // required for the foreground region
};

struct EvalResult {
  std::vector<EvalRecord> records;
  EvalSummary summary;
};

/// Per-image, per-metric percent increases and their arithmetic means.
/// Processing order is fixed (sorted by image id) so results are independent
/// of input order. Foreground region evaluates over the mask bounding box.
/// Zero-baseline or degenerate images are skipped, warned about on stderr and
/// counted in the summary. `jobs` > 1 parallelizes per-image metric work.
EvalResult evaluate_batch(std::vector<EvalItem> items, const std::vector<MetricKind>& metrics,
                          EvalRegion region, const MetricOptions& options = {}, int jobs = 1);

enum class ReportFormat { csv, json };

/// CSV: header `image,metric,region,baseline,output,percent_increase`, one
/// row per record, then summary rows (image column = "summary"). JSON mirrors
/// the same fields. Numbers carry 6 decimal places; UTF-8, LF line endings.
void emit_report(const EvalResult& result, const std::string& path, ReportFormat format);

}  // namespace fsr
