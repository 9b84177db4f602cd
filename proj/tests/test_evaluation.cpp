#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fsr/error.hpp"
#include "fsr/evaluation.hpp"
#include "fsr/rng.hpp"
#include "test_support.hpp"

#include <json.hpp>

using fsr::EvalItem;
using fsr::EvalRegion;
using fsr::ImageTensor;
using fsr::MetricKind;
using testsup::TempDir;

namespace {

// Small consistent batch: out is a noisy LR moved toward HR.
std::vector<EvalItem> make_batch(int count, std::uint64_t seed) {
  fsr::Rng rng(seed);
  std::vector<EvalItem> items;
  for (int i = 0; i < count; ++i) {
    EvalItem item;
    item.id = "img" + std::to_string(i);
    item.hr = testsup::synth_scene(rng, 16);
    item.lr = fsr::degrade(item.hr, 50);
    item.out = item.lr;
    for (std::size_t j = 0; j < item.out.data.size(); ++j)
      item.out.data[j] =
          static_cast<float>(0.5 * item.out.data[j] + 0.5 * item.hr.data[j]);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

TEST_CASE("percent_increase basics") {
  CHECK(fsr::percent_increase(0.8, 0.88) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(fsr::percent_increase(3.7, 3.7) == 0.0);
  CHECK_THROWS_AS(fsr::percent_increase(0.0, 1.0), fsr::NumericError);
}

TEST_CASE("percent_increase reproduces the published PSNR example pair") {
  // 25.5518 -> 26.2194 must give +2.6127 (4 decimals)
  CHECK(fsr::percent_increase(25.5518, 26.2194) == doctest::Approx(2.6127317841).epsilon(1e-9));
}

TEST_CASE("evaluate_batch: baseline == output means zero percent increase") {
  auto items = make_batch(1, 1);
  items[0].out = items[0].lr;
  const fsr::EvalResult r = fsr::evaluate_batch(std::move(items), {MetricKind::mse},
                                                EvalRegion::full);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].percent_increase == 0.0);
  CHECK(r.summary.per_metric.at(MetricKind::mse).mean_percent_increase == 0.0);
}

TEST_CASE("evaluate_batch: +10% and -10% average to zero") {
  const double mean =
      (fsr::percent_increase(2.0, 2.2) + fsr::percent_increase(2.0, 1.8)) / 2.0;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("evaluate_batch mean equals the brute-force recomputation exactly") {
  const fsr::EvalResult r = fsr::evaluate_batch(
      make_batch(5, 2), {MetricKind::mse, MetricKind::psnr, MetricKind::ssim, MetricKind::uqi},
      EvalRegion::full);

  for (MetricKind kind :
       {MetricKind::mse, MetricKind::psnr, MetricKind::ssim, MetricKind::uqi}) {
    double sum = 0.0;
    int n = 0;
    for (const auto& rec : r.records)
      if (rec.metric == kind) {
        sum += rec.percent_increase;
        ++n;
      }
    REQUIRE(n == 5);
    CHECK(r.summary.per_metric.at(kind).mean_percent_increase == sum / n);
  }
}

TEST_CASE("evaluate_batch is order independent") {
  auto items = make_batch(4, 3);
  auto shuffled = items;
  std::swap(shuffled[0], shuffled[3]);
  std::swap(shuffled[1], shuffled[2]);

  const fsr::EvalResult a =
      fsr::evaluate_batch(std::move(items), {MetricKind::ssim}, EvalRegion::full);
  const fsr::EvalResult b =
      fsr::evaluate_batch(std::move(shuffled), {MetricKind::ssim}, EvalRegion::full);

  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].image == b.records[i].image);
    CHECK(a.records[i].percent_increase == b.records[i].percent_increase);
  }
  CHECK(a.summary.per_metric.at(MetricKind::ssim).mean_percent_increase ==
        b.summary.per_metric.at(MetricKind::ssim).mean_percent_increase);
}

TEST_CASE("evaluate_batch parallel jobs reduce identically to serial") {
  const fsr::EvalResult a =
      fsr::evaluate_batch(make_batch(6, 4), {MetricKind::ssim, MetricKind::mse},
                          EvalRegion::full, {}, 1);
  const fsr::EvalResult b =
      fsr::evaluate_batch(make_batch(6, 4), {MetricKind::ssim, MetricKind::mse},
                          EvalRegion::full, {}, 4);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(a.records[i].percent_increase == b.records[i].percent_increase);
}

TEST_CASE("foreground region with an all-ones mask equals full region exactly") {
  auto with_mask = make_batch(3, 5);
  for (auto& item : with_mask) item.mask = fsr::Mask(16, 16, 1);
  auto no_mask = make_batch(3, 5);

  const fsr::EvalResult fg = fsr::evaluate_batch(std::move(with_mask), {MetricKind::ssim},
                                                 EvalRegion::foreground);
  const fsr::EvalResult full =
      fsr::evaluate_batch(std::move(no_mask), {MetricKind::ssim}, EvalRegion::full);

  REQUIRE(fg.records.size() == full.records.size());
  for (std::size_t i = 0; i < fg.records.size(); ++i) {
    CHECK(fg.records[i].baseline == full.records[i].baseline);
    CHECK(fg.records[i].output == full.records[i].output);
  }
}

TEST_CASE("foreground region uses the mask bounding box") {
  auto items = make_batch(1, 6);
  fsr::Mask m(16, 16);
  for (int y = 2; y < 14; ++y)
    for (int x = 3; x < 15; ++x) m.at(y, x) = 1;
  items[0].mask = m;

  // windowed ssim needs >= 11 pixels; the 12x12 bbox keeps it well-defined
  const fsr::EvalResult r =
      fsr::evaluate_batch(std::move(items), {MetricKind::ssim}, EvalRegion::foreground);
  CHECK(r.records.size() == 1);
}

TEST_CASE("zero-baseline images are skipped and counted, not fatal") {
  auto items = make_batch(2, 7);
  // identical lr == hr makes the PSNR baseline infinite -> NumericError ->
  // skip; mse baseline 0 -> percent_increase zero baseline -> skip
  items[0].lr = items[0].hr;
  items[0].out = items[0].hr;

  const fsr::EvalResult r = fsr::evaluate_batch(std::move(items),
                                                {MetricKind::mse, MetricKind::psnr},
                                                EvalRegion::full);
  CHECK(r.summary.per_metric.at(MetricKind::mse).count == 1);
  CHECK(r.summary.per_metric.at(MetricKind::mse).skipped == 1);
  CHECK(r.summary.per_metric.at(MetricKind::psnr).count == 1);
  CHECK(r.summary.per_metric.at(MetricKind::psnr).skipped == 1);
}

TEST_CASE("evaluate_batch argument errors") {
  CHECK_THROWS_AS(fsr::evaluate_batch({}, {MetricKind::mse}, EvalRegion::full),
                  fsr::ArgumentError);
  auto items = make_batch(1, 8);
  CHECK_THROWS_AS(fsr::evaluate_batch(std::move(items), {}, EvalRegion::full),
                  fsr::ArgumentError);
  auto items2 = make_batch(1, 8);
  CHECK_THROWS_AS(fsr::evaluate_batch(std::move(items2), {MetricKind::mse},
                                      EvalRegion::foreground),
                  fsr::ArgumentError);  // no mask
}

TEST_CASE("emit_report CSV: row count and exact summary recomputation") {
  TempDir dir("report");
  const fsr::EvalResult r = fsr::evaluate_batch(make_batch(4, 9),
                                                {MetricKind::mse, MetricKind::ssim},
                                                EvalRegion::full);
  fsr::emit_report(r, dir.file("report.csv"), fsr::ReportFormat::csv);

  std::ifstream in(dir.file("report.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "image,metric,region,baseline,output,percent_increase");

  int record_rows = 0, summary_rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind("summary,", 0) == 0)
      ++summary_rows;
    else
      ++record_rows;
  }
  CHECK(record_rows == static_cast<int>(r.records.size()));
  CHECK(summary_rows == 2);
}

TEST_CASE("emit_report JSON round-trips the printed values") {
  TempDir dir("report");
  const fsr::EvalResult r =
      fsr::evaluate_batch(make_batch(2, 10), {MetricKind::ssim}, EvalRegion::full);
  fsr::emit_report(r, dir.file("report.json"), fsr::ReportFormat::json);

  const nlohmann::json doc = nlohmann::json::parse(testsup::read_file_bytes(dir.file("report.json")));
  REQUIRE(doc["records"].size() == 2);
  char expected[64];
  std::snprintf(expected, sizeof(expected), "%.6f", r.records[0].percent_increase);
  CHECK(doc["records"][0]["percent_increase"].get<std::string>() == expected);
  CHECK(doc["summary"][0]["count"].get<int>() == 2);
}

TEST_CASE("emit_report with no records is an error") {
  fsr::EvalResult empty;
  TempDir dir("report");
  CHECK_THROWS_AS(fsr::emit_report(empty, dir.file("x.csv"), fsr::ReportFormat::csv),
                  fsr::ArgumentError);
}
