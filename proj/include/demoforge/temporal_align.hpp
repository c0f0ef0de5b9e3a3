#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "demoforge/episode.hpp"
#include "demoforge/episode_io.hpp"
#include "demoforge/error.hpp"
#include "demoforge/parallel.hpp"

namespace demoforge {

/// One fixed-dimension vector per frame of a source episode.
struct EmbeddingSequence {
  std::vector<std::vector<double>> vectors;
  std::string source_episode_id;
  std::size_t dim = 0;

  std::size_t size() const { return vectors.size(); }

  void validate() const {
    if (dim == 0) fail(ErrorCode::DimMismatch, "embedding dim must be positive");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != dim)
        fail(ErrorCode::DimMismatch, "embedding " + std::to_string(i) + " has dim " + std::to_string(vectors[i].size()) +
                                         ", expected " + std::to_string(dim));
      for (double v : vectors[i])
        if (!std::isfinite(v)) fail(ErrorCode::ParseError, "non-finite embedding component at frame " + std::to_string(i));
    }
  }
};

using IndexPair = std::pair<std::size_t, std::size_t>;  // (hand_index, gripper_index)

struct AlignmentMap {
  std::vector<IndexPair> pairs;

  std::size_t length() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  /// Hand indices strictly increasing, gripper indices non-decreasing, all in bounds.
  void validate(std::size_t hand_len, std::size_t gripper_len) const {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [h, g] = pairs[k];
      if (h >= hand_len || g >= gripper_len)
        fail(ErrorCode::InvalidMap, "pair " + std::to_string(k) + " (" + std::to_string(h) + "," + std::to_string(g) +
                                        ") outside episode bounds");
      if (k > 0 && (h <= pairs[k - 1].first || g < pairs[k - 1].second))
        fail(ErrorCode::InvalidMap, "pair " + std::to_string(k) + " breaks monotonicity");
    }
  }

  friend bool operator==(const AlignmentMap&, const AlignmentMap&) = default;
};

inline constexpr int kEmbedGrid = 32;

/// Luma of an RGB8 pixel, ITU-R BT.601 weights.
inline double luma(const std::uint8_t* px) { return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]; }

namespace detail {

/// Area-average resample of an arbitrary raster to kEmbedGrid^2. Work in a
/// coordinate system scaled by kEmbedGrid along each axis so every source
/// pixel / target cell overlap is an integer length.
inline std::vector<double> area_downsample_luma(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  constexpr int G = kEmbedGrid;

  std::vector<double> rows(static_cast<std::size_t>(h) * G, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = luma(img.pixel(x, y));
      const long lo = static_cast<long>(x) * G;
      const long hi = lo + G;
      for (int u = static_cast<int>(lo / w); u < G && static_cast<long>(u) * w < hi; ++u) {
        const long overlap = std::min(hi, static_cast<long>(u + 1) * w) - std::max(lo, static_cast<long>(u) * w);
        if (overlap > 0) rows[static_cast<std::size_t>(y) * G + u] += v * static_cast<double>(overlap);
      }
    }
  }

  std::vector<double> cells(static_cast<std::size_t>(G) * G, 0.0);
  for (int y = 0; y < h; ++y) {
    const long lo = static_cast<long>(y) * G;
    const long hi = lo + G;
    for (int v = static_cast<int>(lo / h); v < G && static_cast<long>(v) * h < hi; ++v) {
      const long overlap = std::min(hi, static_cast<long>(v + 1) * h) - std::max(lo, static_cast<long>(v) * h);
      if (overlap <= 0) continue;
      for (int u = 0; u < G; ++u)
        cells[static_cast<std::size_t>(v) * G + u] += rows[static_cast<std::size_t>(y) * G + u] * static_cast<double>(overlap);
    }
  }
  const double area = static_cast<double>(w) * static_cast<double>(h);
  for (double& c : cells) c /= area;
  return cells;
}

inline void z_normalize(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  // Constant rasters can leave rounding residue in the cell means.
  if (var <= 1e-12) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  const double sd = std::sqrt(var);
  for (double& x : v) x = (x - mean) / sd;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline void check_pair(const EmbeddingSequence& hand, const EmbeddingSequence& gripper) {
  if (hand.vectors.empty() || gripper.vectors.empty()) fail(ErrorCode::EmptyInput, "alignment needs non-empty sequences");
  if (hand.dim != gripper.dim)
    fail(ErrorCode::DimMismatch, "embedding dims differ: " + std::to_string(hand.dim) + " vs " + std::to_string(gripper.dim));
  hand.validate();
  gripper.validate();
}

/// Row-major hand x gripper squared-distance matrix.
inline std::vector<double> distance_matrix(const EmbeddingSequence& hand, const EmbeddingSequence& gripper) {
  const std::size_t n = hand.size();
  const std::size_t m = gripper.size();
  std::vector<double> d(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) d[i * m + j] = squared_distance(hand.vectors[i], gripper.vectors[j]);
  return d;
}

}  // namespace detail

/// Deterministic per-frame pixel embedding: luma, area-average to 32x32,
/// flatten, z-normalize (constant frames map to the zero vector).
inline EmbeddingSequence embed_builtin(const Episode& episode, unsigned threads = default_thread_count()) {
  if (episode.empty()) fail(ErrorCode::EmptyInput, "episode '" + episode.episode_id() + "' has no frames");
  EmbeddingSequence seq;
  seq.source_episode_id = episode.episode_id();
  seq.dim = static_cast<std::size_t>(kEmbedGrid) * kEmbedGrid;
  seq.vectors.resize(episode.size());
  parallel_for(episode.size(), threads, [&](std::size_t i) {
    auto v = detail::area_downsample_luma(episode.frame(i).image);
    detail::z_normalize(v);
    seq.vectors[i] = std::move(v);
  });
  return seq;
}

struct NnAlignOptions {
  int cycle_tolerance = 2;
};

/// Nearest-neighbour retrieval from each hand frame into the gripper
/// sequence. A match survives only if retrieving back from the gripper
/// frame lands within cycle_tolerance of the starting hand frame. The
/// survivors are reduced to a longest subsequence with strictly increasing
/// gripper index (ties: smaller summed distance, then earlier pairs).
inline AlignmentMap nn_align(const EmbeddingSequence& hand, const EmbeddingSequence& gripper, NnAlignOptions opts = {}) {
  detail::check_pair(hand, gripper);
  if (opts.cycle_tolerance < 0) fail(ErrorCode::OutOfRange, "cycle_tolerance must be >= 0");
  const std::size_t n = hand.size();
  const std::size_t m = gripper.size();
  const std::vector<double> d = detail::distance_matrix(hand, gripper);

  std::vector<std::size_t> forward(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 1; j < m; ++j)
      if (d[i * m + j] < d[i * m + forward[i]]) forward[i] = j;

  std::vector<std::size_t> backward(m, 0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 1; i < n; ++i)
      if (d[i * m + j] < d[backward[j] * m + j]) backward[j] = i;

  std::vector<IndexPair> kept;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t back = backward[forward[i]];
    const std::size_t drift = back > i ? back - i : i - back;
    if (drift <= static_cast<std::size_t>(opts.cycle_tolerance)) kept.emplace_back(i, forward[i]);
  }
  if (kept.empty()) return {};

  // O(k^2) DP over kept pairs; k is bounded by the hand length.
  const std::size_t k = kept.size();
  std::vector<std::size_t> len(k, 1);
  std::vector<double> cost(k);
  std::vector<std::size_t> prev(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    const double own = d[kept[a].first * m + kept[a].second];
    cost[a] = own;
    for (std::size_t b = 0; b < a; ++b) {
      if (kept[b].second >= kept[a].second) continue;
      const std::size_t l = len[b] + 1;
      const double c = cost[b] + own;
      if (l > len[a] || (l == len[a] && c < cost[a])) {
        len[a] = l;
        cost[a] = c;
        prev[a] = b;
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < k; ++a)
    if (len[a] > len[best] || (len[a] == len[best] && cost[a] < cost[best])) best = a;

  AlignmentMap out;
  for (std::size_t a = best; a != k; a = prev[a]) out.pairs.push_back(kept[a]);
  std::reverse(out.pairs.begin(), out.pairs.end());
  return out;
}

struct DtwResult {
  std::vector<IndexPair> path;  // full warping path from (0,0) to (n-1,m-1)
  double total_cost = 0.0;      // sum of local costs along the path
  AlignmentMap map;             // path reduced to one gripper index per hand index
};

/// Classic DTW under squared-Euclidean local cost with steps (1,1), (1,0), (0,1).
inline DtwResult dtw_solve(const EmbeddingSequence& hand, const EmbeddingSequence& gripper) {
  detail::check_pair(hand, gripper);
  const std::size_t n = hand.size();
  const std::size_t m = gripper.size();
  const std::vector<double> c = detail::distance_matrix(hand, gripper);
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> acc(n * m, inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best = 0.0;
      if (i > 0 || j > 0) {
        best = inf;
        if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
        if (i > 0) best = std::min(best, at(i - 1, j));
        if (j > 0) best = std::min(best, at(i, j - 1));
      }
      at(i, j) = best + c[i * m + j];
    }
  }

  DtwResult r;
  r.total_cost = at(n - 1, m - 1);
  std::size_t i = n - 1, j = m - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    // Preference on ties: diagonal, then hand step, then gripper step.
    if (i > 0 && j > 0) {
      const double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());

  for (const auto& [hi, gi] : r.path) {
    if (!r.map.pairs.empty() && r.map.pairs.back().first == hi) {
      auto& cur = r.map.pairs.back();
      const double here = c[hi * m + gi];
      const double held = c[hi * m + cur.second];
      if (here < held || (here == held && gi < cur.second)) cur.second = gi;
    } else {
      r.map.pairs.emplace_back(hi, gi);
    }
  }
  return r;
}

inline AlignmentMap dtw_align(const EmbeddingSequence& hand, const EmbeddingSequence& gripper) {
  return dtw_solve(hand, gripper).map;
}

/// Selects aligned frames from both episodes. Both outputs carry the hand
/// frame timestamps. The gripper pose stream is resampled at the selected
/// gripper frames and restamped when it covers them, otherwise dropped.
inline std::pair<Episode, Episode> apply_alignment(const Episode& hand, const Episode& gripper, const AlignmentMap& map) {
  if (map.empty()) fail(ErrorCode::EmptyAlignment, "alignment map has no pairs");
  map.validate(hand.size(), gripper.size());

  std::vector<Frame> hf, gf;
  hf.reserve(map.length());
  gf.reserve(map.length());
  std::vector<std::int64_t> gripper_src_times;
  for (const auto& [h, g] : map.pairs) {
    hf.push_back(hand.frame(h));
    Frame f = gripper.frame(g);
    gripper_src_times.push_back(f.timestamp_ns);
    f.timestamp_ns = hand.frame(h).timestamp_ns;
    gf.push_back(std::move(f));
  }

  std::vector<StampedPose> gposes;
  const auto& gstream = gripper.camera_poses();
  if (!gstream.empty() && gripper_src_times.front() >= gstream.front().t_ns &&
      gripper_src_times.back() <= gstream.back().t_ns) {
    const auto sampled = resample_poses(gstream, gripper_src_times);
    // Repeated gripper indices would repeat stamps only if hand stamps repeat, which validate() excludes.
    for (std::size_t k = 0; k < sampled.size(); ++k) gposes.push_back({hf[k].timestamp_ns, sampled[k]});
  }

  return {Episode(hand.episode_id(), hand.role(), hand.task(), hand.obj_name(), std::move(hf), hand.camera_poses()),
          Episode(gripper.episode_id(), gripper.role(), gripper.task(), gripper.obj_name(), std::move(gf), std::move(gposes))};
}

// ---- Files -----------------------------------------------------------------

inline json alignment_json(const AlignmentMap& map, const std::string& hand_id, const std::string& gripper_id,
                           int cycle_tolerance) {
  json pairs = json::array();
  for (const auto& [h, g] : map.pairs) pairs.push_back({h, g});
  json j = json::object();
  j["hand_episode"] = hand_id;
  j["gripper_episode"] = gripper_id;
  j["cycle_tolerance"] = cycle_tolerance;
  j["pairs"] = std::move(pairs);
  return j;
}

inline AlignmentMap parse_alignment(const json& j, const std::string& where) {
  AlignmentMap map;
  for (const auto& p : get_field<std::vector<std::vector<std::size_t>>>(j, "pairs", where)) {
    if (p.size() != 2) fail(ErrorCode::ParseError, where + ": alignment pair must have two entries");
    map.pairs.emplace_back(p[0], p[1]);
  }
  return map;
}

/// emb.jsonl: one {"idx", "vec"} record per frame, indices 0..n-1 in any order.
inline EmbeddingSequence read_embeddings(const fs::path& p, std::string source_episode_id) {
  const auto rows = read_jsonl(p);
  EmbeddingSequence seq;
  seq.source_episode_id = std::move(source_episode_id);
  seq.vectors.resize(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string where = p.string() + " record " + std::to_string(k);
    const auto idx = get_field<std::size_t>(rows[k], "idx", where);
    if (idx >= rows.size() || seen[idx]) fail(ErrorCode::ParseError, where + ": idx out of range or duplicated");
    seen[idx] = true;
    seq.vectors[idx] = get_field<std::vector<double>>(rows[k], "vec", where);
  }
  if (seq.vectors.empty()) fail(ErrorCode::EmptyInput, p.string() + " has no embeddings");
  seq.dim = seq.vectors.front().size();
  seq.validate();
  return seq;
}

inline void write_embeddings(const fs::path& p, const EmbeddingSequence& seq) {
  std::vector<json> rows;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    json r = json::object();
    r["idx"] = i;
    r["vec"] = seq.vectors[i];
    rows.push_back(std::move(r));
  }
  write_jsonl(p, rows);
}

}  // namespace demoforge
