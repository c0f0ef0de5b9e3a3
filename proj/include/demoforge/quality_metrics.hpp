#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "demoforge/episode.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/parallel.hpp"
#include "demoforge/raster.hpp"
#include "demoforge/temporal_align.hpp"

namespace demoforge {

inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);

/// PSNR over all three channels with MAX = 255. Identical images give +inf.
inline double psnr(const Image& a, const Image& b) {
  require_same_dims(a, b, "psnr");
  std::uint64_t sse = 0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const int d = static_cast<int>(da[i]) - static_cast<int>(db[i]);
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return std::numeric_limits<double>::infinity();
  const double mse = static_cast<double>(sse) / static_cast<double>(da.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

/// Single-scale SSIM on luma: 8x8 uniform window, stride 1, mean over all
/// window positions.
inline double ssim(const Image& a, const Image& b) {
  require_same_dims(a, b, "ssim");
  const int w = a.width();
  const int h = a.height();
  if (w < kSsimWindow || h < kSsimWindow)
    fail(ErrorCode::TooSmall, "ssim needs at least " + std::to_string(kSsimWindow) + " px per side");

  std::vector<double> la(a.pixel_count()), lb(b.pixel_count());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      la[i] = luma(a.pixel(x, y));
      lb[i] = luma(b.pixel(x, y));
    }

  constexpr double n = kSsimWindow * kSsimWindow;
  double total = 0.0;
  for (int y0 = 0; y0 + kSsimWindow <= h; ++y0) {
    for (int x0 = 0; x0 + kSsimWindow <= w; ++x0) {
      double sa = 0.0, sb = 0.0;
      for (int y = y0; y < y0 + kSsimWindow; ++y)
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          sa += la[i];
          sb += lb[i];
        }
      const double ma = sa / n, mb = sb / n;
      double vaa = 0.0, vbb = 0.0, vab = 0.0;
      for (int y = y0; y < y0 + kSsimWindow; ++y)
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double da = la[i] - ma, db = lb[i] - mb;
          vaa += da * da;
          vbb += db * db;
          vab += da * db;
        }
      vaa /= n;
      vbb /= n;
      vab /= n;
      total += ((2.0 * ma * mb + kSsimC1) * (2.0 * vab + kSsimC2)) /
               ((ma * ma + mb * mb + kSsimC1) * (vaa + vbb + kSsimC2));
    }
  }
  const double windows = static_cast<double>(w - kSsimWindow + 1) * static_cast<double>(h - kSsimWindow + 1);
  return total / windows;
}

struct FrameMetric {
  std::size_t idx = 0;
  double psnr_db = 0.0;  // +inf when the frames are identical
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<FrameMetric> per_frame;
  double mean_psnr_db = 0.0;  // over finite frames; NaN if every frame is infinite
  std::size_t infinite_psnr_frames = 0;
  double mean_ssim = 0.0;
};

inline MetricReport evaluate_images(const std::vector<const Image*>& pred, const std::vector<const Image*>& truth,
                                    unsigned threads = default_thread_count()) {
  if (pred.size() != truth.size())
    fail(ErrorCode::LengthMismatch, std::to_string(pred.size()) + " predicted vs " + std::to_string(truth.size()) + " truth frames");
  if (pred.empty()) fail(ErrorCode::EmptyInput, "nothing to evaluate");
  MetricReport r;
  r.per_frame.resize(pred.size());
  parallel_for(pred.size(), threads, [&](std::size_t i) {
    r.per_frame[i] = {i, psnr(*pred[i], *truth[i]), ssim(*pred[i], *truth[i])};
  });
  double psum = 0.0, ssum = 0.0;
  std::size_t finite = 0;
  for (const auto& f : r.per_frame) {
    ssum += f.ssim;
    if (std::isinf(f.psnr_db)) {
      ++r.infinite_psnr_frames;
    } else {
      psum += f.psnr_db;
      ++finite;
    }
  }
  r.mean_ssim = ssum / static_cast<double>(r.per_frame.size());
  r.mean_psnr_db = finite ? psum / static_cast<double>(finite) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline MetricReport evaluate_episode(const Episode& pred, const Episode& truth, unsigned threads = default_thread_count()) {
  if (pred.size() != truth.size())
    fail(ErrorCode::LengthMismatch, "episode lengths differ: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
  std::vector<const Image*> p, t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p.push_back(&pred.frame(i).image);
    t.push_back(&truth.frame(i).image);
  }
  return evaluate_images(p, t, threads);
}

/// report.json. Infinite PSNR is written as the string "inf"; a mean over
/// zero finite frames is written as null.
inline json report_json(const MetricReport& r, json config = json::object()) {
  config["psnr"] = {{"channels", "rgb"}, {"max", 255}};
  config["ssim"] = {{"channel", "luma_bt601"}, {"window", kSsimWindow}, {"stride", 1}, {"weights", "uniform"},
                    {"c1", kSsimC1}, {"c2", kSsimC2}};
  json per = json::array();
  for (const auto& f : r.per_frame) {
    json e = json::object();
    e["idx"] = f.idx;
    if (std::isinf(f.psnr_db))
      e["psnr_db"] = "inf";
    else
      e["psnr_db"] = f.psnr_db;
    e["ssim"] = f.ssim;
    per.push_back(std::move(e));
  }
  json j = json::object();
  j["config"] = std::move(config);
  if (std::isnan(r.mean_psnr_db))
    j["mean_psnr_db"] = nullptr;
  else
    j["mean_psnr_db"] = r.mean_psnr_db;
  j["infinite_psnr_frames"] = r.infinite_psnr_frames;
  j["mean_ssim"] = r.mean_ssim;
  j["per_frame"] = std::move(per);
  return j;
}

}  // namespace demoforge
