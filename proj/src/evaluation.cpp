#include "fsr/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "fsr/error.hpp"

#include <json.hpp>

namespace fsr {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct BBox {
  int y0, x0, y1, x1;  // half-open
};

BBox mask_bounding_box(const Mask& mask) {
  int y0 = mask.height, x0 = mask.width, y1 = 0, x1 = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) {
        y0 = std::min(y0, y);
        x0 = std::min(x0, x);
        y1 = std::max(y1, y + 1);
        x1 = std::max(x1, x + 1);
      }
  if (y1 <= y0) throw ArgumentError("foreground evaluation: mask is empty");
  return {y0, x0, y1, x1};
}

ImageTensor crop(const ImageTensor& img, const BBox& b) {
  ImageTensor out(b.y1 - b.y0, b.x1 - b.x0);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(b.y0 + y, b.x0 + x, c);
  return out;
}

double run_metric(MetricKind kind, const ImageTensor& a, const ImageTensor& b,
                  const MetricOptions& opt) {
  switch (kind) {
    case MetricKind::mse: return mse(a, b);
    case MetricKind::psnr: return psnr(a, b, opt.psnr_variant);
    case MetricKind::ssim: return ssim(a, b, opt.ssim);
    case MetricKind::uqi: return uqi(a, b, opt.uqi_mode, opt.uqi_window);
  }
  throw ArgumentError("run_metric: unknown metric kind");
}

}  // namespace

std::string eval_region_name(EvalRegion region) {
  return region == EvalRegion::full ? "full" : "foreground";
}

double percent_increase(double baseline, double output) {
  if (baseline == 0.0) throw NumericError("percent_increase: zero baseline");
  return (output - baseline) / baseline * 100.0;
}

EvalResult evaluate_batch(std::vector<EvalItem> items, const std::vector<MetricKind>& metrics,
                          EvalRegion region, const MetricOptions& options, int jobs) {
  if (items.empty()) throw ArgumentError("evaluate_batch: empty batch");
  if (metrics.empty()) throw ArgumentError("evaluate_batch: no metrics selected");

  // Fixed processing order: sorted by image id.
  std::sort(items.begin(), items.end(),
            [](const EvalItem& a, const EvalItem& b) { return a.id < b.id; });

  for (const auto& item : items) {
    if (!item.lr.same_shape(item.hr) || !item.lr.same_shape(item.out))
      throw ArgumentError("evaluate_batch: dimension mismatch for image '" + item.id + "'");
    if (region == EvalRegion::foreground && !item.mask)
      throw ArgumentError("evaluate_batch: foreground region requires a mask for '" + item.id +
                          "'");
  }

  struct PerImage {
    std::vector<EvalRecord> records;
    std::vector<std::pair<MetricKind, std::string>> skipped;
  };
  std::vector<PerImage> per_image(items.size());

  auto eval_one = [&](std::size_t idx) {
    const EvalItem& item = items[idx];
    ImageTensor lr = item.lr, hr = item.hr, out = item.out;
    if (region == EvalRegion::foreground) {
      const BBox box = mask_bounding_box(*item.mask);
      lr = crop(lr, box);
      hr = crop(hr, box);
      out = crop(out, box);
    }
    for (MetricKind kind : metrics) {
      try {
        const double baseline = run_metric(kind, lr, hr, options);
        const double output = run_metric(kind, out, hr, options);
        const double pct = percent_increase(baseline, output);
        per_image[idx].records.push_back({item.id, kind, region, baseline, output, pct});
      } catch (const NumericError& e) {
        per_image[idx].skipped.emplace_back(kind, e.what());
      }
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) eval_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1))
          eval_one(i);
      });
    for (auto& th : pool) th.join();
  }

  // Reduce in the fixed sorted order regardless of completion order.
  EvalResult result;
  result.summary.region = region;
  std::map<MetricKind, double> pct_sum, base_sum, out_sum;
  for (const auto& img : per_image) {
    for (const auto& rec : img.records) {
      result.records.push_back(rec);
      auto& agg = result.summary.per_metric[rec.metric];
      agg.count += 1;
      pct_sum[rec.metric] += rec.percent_increase;
      base_sum[rec.metric] += rec.baseline;
      out_sum[rec.metric] += rec.output;
    }
    for (const auto& [kind, why] : img.skipped) {
      result.summary.per_metric[kind].skipped += 1;
      std::cerr << "[fsr] warning: skipping " << metric_kind_name(kind) << " record: " << why
                << "\n";
    }
  }
  for (auto& [kind, agg] : result.summary.per_metric) {
    if (agg.count == 0) continue;
    agg.mean_percent_increase = pct_sum[kind] / agg.count;
    agg.mean_baseline = base_sum[kind] / agg.count;
    agg.mean_output = out_sum[kind] / agg.count;
  }
  result.summary.record_count = static_cast<int>(result.records.size());
  return result;
}

void emit_report(const EvalResult& result, const std::string& path, ReportFormat format) {
  if (result.records.empty())
    throw ArgumentError("emit_report: no records to report (summary requires count > 0)");

  if (format == ReportFormat::csv) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report '" + path + "'");
    out << "image,metric,region,baseline,output,percent_increase\n";
    for (const auto& r : result.records)
      out << r.image << ',' << metric_kind_name(r.metric) << ',' << eval_region_name(r.region)
          << ',' << fixed6(r.baseline) << ',' << fixed6(r.output) << ','
          << fixed6(r.percent_increase) << '\n';
    for (const auto& [kind, agg] : result.summary.per_metric)
      out << "summary," << metric_kind_name(kind) << ','
          << eval_region_name(result.summary.region) << ',' << fixed6(agg.mean_baseline) << ','
          << fixed6(agg.mean_output) << ',' << fixed6(agg.mean_percent_increase) << '\n';
    if (!out) throw IoError("write failed for report '" + path + "'");
    return;
  }

  nlohmann::ordered_json doc;
  doc["records"] = nlohmann::ordered_json::array();
  for (const auto& r : result.records)
    doc["records"].push_back({{"image", r.image},
                              {"metric", metric_kind_name(r.metric)},
                              {"region", eval_region_name(r.region)},
                              {"baseline", fixed6(r.baseline)},
                              {"output", fixed6(r.output)},
                              {"percent_increase", fixed6(r.percent_increase)}});
  doc["summary"] = nlohmann::ordered_json::array();
  for (const auto& [kind, agg] : result.summary.per_metric)
    doc["summary"].push_back({{"metric", metric_kind_name(kind)},
                              {"region", eval_region_name(result.summary.region)},
                              {"mean_baseline", fixed6(agg.mean_baseline)},
                              {"mean_output", fixed6(agg.mean_output)},
                              {"mean_percent_increase", fixed6(agg.mean_percent_increase)},
                              {"count", agg.count},
                              {"skipped", agg.skipped}});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report '" + path + "'");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("write failed for report '" + path + "'");
}

}  // namespace fsr
