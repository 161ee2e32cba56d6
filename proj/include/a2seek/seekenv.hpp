// Copyright 2026 The A2Seek Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Synthetic aerial scenes with a controlled information gap. Each scene holds
// at most one anomaly confined to a single coarse cell. Two "ambiguous"
// classes paint patterns with the same pixel mass, so their coarse cell means
// coincide; only the full-resolution crop of that cell separates them. Other
// classes already differ in coarse means.
//
// Noise is i.i.d. per pixel, sigma * u with u uniform on {-1, 0, +1}, which
// keeps the Bayesian posterior over (class, placement) exactly enumerable.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "a2seek/codes.hpp"
#include "a2seek/geometry.hpp"
#include "a2seek/rewards.hpp"
#include "a2seek/rng.hpp"

namespace a2seek {

struct GenParams {
  int pixel_dim = 16;
  int coarse_dim = 4;
  std::vector<ActionCode> classes = {ActionCode::E00, ActionCode::E01, ActionCode::E03, ActionCode::E06,
                                     ActionCode::E18};
  std::pair<ActionCode, ActionCode> ambiguous_pair = {ActionCode::E06, ActionCode::E18};
  double noise_sigma = 0.05;
  int anomaly_min = 2;
  int anomaly_max = 3;
  std::vector<double> class_prior = {0.2, 0.2, 0.2, 0.2, 0.2};

  GridDims grid() const { return {coarse_dim, pixel_dim}; }
  int cell_pixels() const { return pixel_dim / coarse_dim; }
  int num_cells() const { return coarse_dim * coarse_dim; }
  int num_classes() const { return static_cast<int>(classes.size()); }

  int class_index(ActionCode code) const {
    for (int i = 0; i < num_classes(); ++i)
      if (classes[static_cast<std::size_t>(i)] == code) return i;
    return -1;
  }

  bool is_ambiguous(ActionCode code) const { return code == ambiguous_pair.first || code == ambiguous_pair.second; }

  void check() const {
    if (coarse_dim <= 0 || pixel_dim <= 0 || pixel_dim % coarse_dim != 0)
      throw std::invalid_argument("GenParams: coarse_dim must divide pixel_dim");
    if (classes.empty()) throw std::invalid_argument("GenParams: classes must be nonempty");
    if (class_index(ambiguous_pair.first) < 0 || class_index(ambiguous_pair.second) < 0 ||
        ambiguous_pair.first == ambiguous_pair.second || ambiguous_pair.first == ActionCode::E00 ||
        ambiguous_pair.second == ActionCode::E00)
      throw std::invalid_argument("GenParams: ambiguous_pair must be two distinct abnormal classes");
    for (std::size_t i = 0; i < classes.size(); ++i)
      for (std::size_t j = i + 1; j < classes.size(); ++j)
        if (classes[i] == classes[j]) throw std::invalid_argument("GenParams: duplicate class");
    if (class_prior.size() != classes.size())
      throw std::invalid_argument("GenParams: class_prior must have one entry per class");
    double sum = 0;
    for (double p : class_prior) {
      if (!(p >= 0)) throw std::invalid_argument("GenParams: class_prior entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("GenParams: class_prior must sum to 1");
    if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma))
      throw std::invalid_argument("GenParams: noise_sigma must be finite and >= 0");
    if (anomaly_min < 1 || anomaly_max < anomaly_min || anomaly_max > cell_pixels())
      throw std::invalid_argument("GenParams: anomaly size must lie in [1, cell size]");
  }
};

/// Where an anomaly sits: its cell, side length and offset inside the cell.
struct Placement {
  int cell = 0;
  int size = 2;
  int offset_x = 0;
  int offset_y = 0;

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  ActionCode class_code = ActionCode::E00;
  std::optional<Placement> placement;
  std::optional<BoundingBox> anomaly_rect;
  std::vector<double> pixels;  // row-major, pixel_dim x pixel_dim
  bool ambiguous = false;
  bool gt_seek = false;
  std::optional<BoundingBox> gt_seek_region;
  int pixel_dim = 16;
  int coarse_dim = 4;

  GridDims grid() const { return {coarse_dim, pixel_dim}; }
  double pixel(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(pixel_dim) + static_cast<std::size_t>(x)];
  }
  std::optional<int> gt_seek_cell() const {
    if (!gt_seek_region) return std::nullopt;
    return snap_to_cell(*gt_seek_region, grid());
  }

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct Observation {
  std::vector<double> coarse_features;  // per-cell pixel means, row-major
  std::vector<double> seek_features;    // pixels of the sought cell, or zeros
  std::optional<int> seek_cell;
};

namespace env_detail {

/// Pattern intensity at (i, j) inside a size x size anomaly, or 0.
inline double pattern_value(ActionCode code, const GenParams& params, int size, int i, int j) {
  (void)size;
  if (code == ActionCode::E00) return 0.0;
  if (code == params.ambiguous_pair.first) return (i % 2 == 0) ? 1.0 : 0.0;   // horizontal stripes
  if (code == params.ambiguous_pair.second) return (j % 2 == 0) ? 1.0 : 0.0;  // vertical stripes
  // Salient classes: uniform fill whose level grows with their rank.
  int rank = 0;
  for (ActionCode c : params.classes) {
    if (c == code) break;
    if (c != ActionCode::E00 && !params.is_ambiguous(c)) ++rank;
  }
  return 1.0 + 2.0 * rank;
}

inline double pattern_mass(ActionCode code, const GenParams& params, int size) {
  double m = 0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) m += pattern_value(code, params, size, i, j);
  return m;
}

inline BoundingBox placement_rect(const Placement& p, const GenParams& params) {
  BoundingBox cell = cell_rect(p.cell, params.grid());
  double x0 = cell.x_min + p.offset_x;
  double y0 = cell.y_min + p.offset_y;
  return {x0, y0, x0 + p.size, y0 + p.size};
}

/// Every placement with its prior probability under the generator.
inline std::vector<std::pair<Placement, double>> all_placements(const GenParams& params) {
  std::vector<std::pair<Placement, double>> out;
  int sizes = params.anomaly_max - params.anomaly_min + 1;
  int s = params.cell_pixels();
  for (int cell = 0; cell < params.num_cells(); ++cell) {
    for (int k = params.anomaly_min; k <= params.anomaly_max; ++k) {
      int span = s - k + 1;
      double p = 1.0 / (params.num_cells() * sizes * span * span);
      for (int oy = 0; oy < span; ++oy)
        for (int ox = 0; ox < span; ++ox) out.push_back({Placement{cell, k, ox, oy}, p});
    }
  }
  return out;
}

/// log P(net noise count = k) for n pixels with u uniform on {-1, 0, 1}.
inline std::vector<double> log_net_noise_table(int n) {
  std::vector<double> probs(static_cast<std::size_t>(2 * n + 1), 0.0);
  probs[static_cast<std::size_t>(n)] = 1.0;
  for (int step = 0; step < n; ++step) {
    std::vector<double> next(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] == 0) continue;
      double third = probs[i] / 3.0;
      next[i] += third;
      if (i > 0) next[i - 1] += third;
      if (i + 1 < probs.size()) next[i + 1] += third;
    }
    probs = std::move(next);
  }
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] > 0 ? std::log(probs[i]) : -INFINITY;
  return out;
}

inline constexpr double kLatticeTol = 1e-6;

/// Recovers the integer noise count from a residual, or nullopt when the
/// residual is off the noise lattice.
inline std::optional<long> noise_count(double residual, double sigma, long max_abs) {
  if (sigma == 0) {
    if (std::abs(residual) < 1e-9) return 0L;
    return std::nullopt;
  }
  double u = residual / sigma;
  double r = std::round(u);
  if (std::abs(u - r) > kLatticeTol || std::abs(r) > static_cast<double>(max_abs)) return std::nullopt;
  return static_cast<long>(r);
}

}  // namespace env_detail

/// Builds the scene for a given class and placement; `noise_seed` drives the
/// pixel noise only.
inline SceneSpec make_scene(ActionCode code, std::optional<Placement> placement, std::uint64_t noise_seed,
                            const GenParams& params) {
  params.check();
  if (params.class_index(code) < 0) throw std::invalid_argument("make_scene: class not in params.classes");
  if ((code == ActionCode::E00) != !placement.has_value())
    throw std::invalid_argument("make_scene: a placement is required exactly for abnormal classes");
  SceneSpec s;
  s.seed = noise_seed;
  s.class_code = code;
  s.pixel_dim = params.pixel_dim;
  s.coarse_dim = params.coarse_dim;
  s.pixels.assign(static_cast<std::size_t>(params.pixel_dim * params.pixel_dim), 0.0);
  if (placement) {
    BoundingBox rect = env_detail::placement_rect(*placement, params);
    s.placement = placement;
    s.anomaly_rect = rect;
    for (int i = 0; i < placement->size; ++i) {
      for (int j = 0; j < placement->size; ++j) {
        int y = static_cast<int>(rect.y_min) + i;
        int x = static_cast<int>(rect.x_min) + j;
        s.pixels[static_cast<std::size_t>(y * params.pixel_dim + x)] =
            env_detail::pattern_value(code, params, placement->size, i, j);
      }
    }
  }
  Rng rng(derive_seed(noise_seed, 1));
  for (double& v : s.pixels) v += params.noise_sigma * (static_cast<double>(rng.below(3)) - 1.0);
  s.ambiguous = params.is_ambiguous(code);
  s.gt_seek = s.ambiguous;
  if (s.gt_seek) s.gt_seek_region = cell_rect(placement->cell, params.grid());
  return s;
}

/// Deterministic in (seed, params).
inline SceneSpec generate_scene(std::uint64_t seed, const GenParams& params) {
  params.check();
  Rng rng(derive_seed(seed, 0));
  ActionCode code = params.classes[rng.categorical(params.class_prior)];
  std::optional<Placement> placement;
  if (code != ActionCode::E00) {
    Placement p;
    p.size = params.anomaly_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(params.anomaly_max - params.anomaly_min + 1)));
    p.cell = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.num_cells())));
    auto span = static_cast<std::uint64_t>(params.cell_pixels() - p.size + 1);
    p.offset_x = static_cast<int>(rng.below(span));
    p.offset_y = static_cast<int>(rng.below(span));
    placement = p;
  }
  return make_scene(code, placement, seed, params);
}

inline std::vector<double> coarse_means(const SceneSpec& scene) {
  int s = scene.pixel_dim / scene.coarse_dim;
  std::vector<double> out(static_cast<std::size_t>(scene.coarse_dim * scene.coarse_dim), 0.0);
  for (int cy = 0; cy < scene.coarse_dim; ++cy) {
    for (int cx = 0; cx < scene.coarse_dim; ++cx) {
      double sum = 0;
      for (int y = cy * s; y < (cy + 1) * s; ++y)
        for (int x = cx * s; x < (cx + 1) * s; ++x) sum += scene.pixel(x, y);
      out[static_cast<std::size_t>(cy * scene.coarse_dim + cx)] = sum / (s * s);
    }
  }
  return out;
}

inline std::vector<double> cell_pixels(const SceneSpec& scene, int cell) {
  BoundingBox r = cell_rect(cell, scene.grid());
  std::vector<double> out;
  for (int y = static_cast<int>(r.y_min); y < static_cast<int>(r.y_max); ++y)
    for (int x = static_cast<int>(r.x_min); x < static_cast<int>(r.x_max); ++x) out.push_back(scene.pixel(x, y));
  return out;
}

/// Bounding box of the crop's bright pixels (value above `threshold`), in
/// frame coordinates; nullopt when nothing in the cell is bright.
inline std::optional<BoundingBox> detect_in_cell(const SceneSpec& scene, int cell, double threshold = 0.5) {
  BoundingBox r = cell_rect(cell, scene.grid());
  std::optional<BoundingBox> box;
  for (int y = static_cast<int>(r.y_min); y < static_cast<int>(r.y_max); ++y) {
    for (int x = static_cast<int>(r.x_min); x < static_cast<int>(r.x_max); ++x) {
      if (!(scene.pixel(x, y) > threshold)) continue;
      BoundingBox px{double(x), double(y), double(x + 1), double(y + 1)};
      if (!box) {
        box = px;
      } else {
        box->x_min = std::min(box->x_min, px.x_min);
        box->y_min = std::min(box->y_min, px.y_min);
        box->x_max = std::max(box->x_max, px.x_max);
        box->y_max = std::max(box->y_max, px.y_max);
      }
    }
  }
  return box;
}

inline Observation observe_cell(const SceneSpec& scene, std::optional<int> cell) {
  Observation obs;
  obs.coarse_features = coarse_means(scene);
  int s = scene.pixel_dim / scene.coarse_dim;
  if (cell) {
    obs.seek_cell = cell;
    obs.seek_features = cell_pixels(scene, *cell);
  } else {
    obs.seek_features.assign(static_cast<std::size_t>(s * s), 0.0);
  }
  return obs;
}

/// Coarse view plus, when a region is given, the full-resolution pixels of the
/// coarse cell containing the region's center.
inline Observation observe(const SceneSpec& scene, const std::optional<BoundingBox>& seek_region) {
  if (!seek_region) return observe_cell(scene, std::nullopt);
  return observe_cell(scene, snap_to_cell(*seek_region, scene.grid()));
}

/// Exact Bayesian posterior over params.classes by enumerating every class
/// and placement the generator can produce.
inline std::vector<double> class_posterior(const Observation& obs, const GenParams& params) {
  params.check();
  const int n_cells = params.num_cells();
  const int s = params.cell_pixels();
  const int n = s * s;
  const double sigma = params.noise_sigma;
  static thread_local int cached_n = -1;
  static thread_local std::vector<double> net_table;
  if (cached_n != n) {
    net_table = env_detail::log_net_noise_table(n);
    cached_n = n;
  }
  const double log_third = -std::log(3.0);

  // Log-likelihood of one cell under a hypothesized pattern inside it (given
  // as per-pixel values), or under background when `pattern` is empty.
  auto cell_loglik = [&](int cell, const std::vector<double>& pattern) -> double {
    if (obs.seek_cell && *obs.seek_cell == cell) {
      double ll = 0;
      for (int p = 0; p < n; ++p) {
        double expect = pattern.empty() ? 0.0 : pattern[static_cast<std::size_t>(p)];
        auto k = env_detail::noise_count(obs.seek_features[static_cast<std::size_t>(p)] - expect, sigma, 1);
        if (!k) return -INFINITY;
        ll += sigma == 0 ? 0.0 : log_third;
      }
      return ll;
    }
    double mass = 0;
    for (double v : pattern) mass += v;
    double residual = obs.coarse_features[static_cast<std::size_t>(cell)] * n - mass;
    auto k = env_detail::noise_count(residual, sigma, n);
    if (!k) return -INFINITY;
    return sigma == 0 ? 0.0 : net_table[static_cast<std::size_t>(*k + n)];
  };

  std::vector<double> background(static_cast<std::size_t>(n_cells));
  double background_total = 0;
  bool background_possible = true;
  for (int c = 0; c < n_cells; ++c) {
    background[static_cast<std::size_t>(c)] = cell_loglik(c, {});
    if (std::isinf(background[static_cast<std::size_t>(c)])) background_possible = false;
    else background_total += background[static_cast<std::size_t>(c)];
  }

  // Log joint for each (class, placement) hypothesis.
  std::vector<std::pair<int, double>> joint;  // class index, log joint
  const auto placements = env_detail::all_placements(params);
  for (int ci = 0; ci < params.num_classes(); ++ci) {
    double prior = params.class_prior[static_cast<std::size_t>(ci)];
    if (prior <= 0) continue;
    ActionCode code = params.classes[static_cast<std::size_t>(ci)];
    if (code == ActionCode::E00) {
      if (background_possible) joint.push_back({ci, std::log(prior) + background_total});
      continue;
    }
    for (const auto& [pl, p_place] : placements) {
      // Pattern laid out over the full cell.
      std::vector<double> pattern(static_cast<std::size_t>(n), 0.0);
      for (int i = 0; i < pl.size; ++i)
        for (int j = 0; j < pl.size; ++j)
          pattern[static_cast<std::size_t>((pl.offset_y + i) * s + pl.offset_x + j)] =
              env_detail::pattern_value(code, params, pl.size, i, j);
      double ll = cell_loglik(pl.cell, pattern);
      if (std::isinf(ll)) continue;
      double rest = 0;
      bool ok = true;
      for (int c = 0; c < n_cells && ok; ++c) {
        if (c == pl.cell) continue;
        double b = background[static_cast<std::size_t>(c)];
        if (std::isinf(b)) ok = false;
        rest += b;
      }
      if (!ok) continue;
      joint.push_back({ci, std::log(prior) + std::log(p_place) + ll + rest});
    }
  }

  std::vector<double> post(static_cast<std::size_t>(params.num_classes()), 0.0);
  if (joint.empty()) {
    // Observation outside the model's support: fall back to the prior.
    return params.class_prior;
  }
  double max_log = -INFINITY;
  for (const auto& [ci, lj] : joint) max_log = std::max(max_log, lj);
  double z = 0;
  for (const auto& [ci, lj] : joint) {
    double w = std::exp(lj - max_log);
    post[static_cast<std::size_t>(ci)] += w;
    z += w;
  }
  for (double& p : post) p /= z;
  return post;
}

inline double entropy_bits(const std::vector<double>& probs) {
  double h = 0;
  for (double p : probs)
    if (p > 0) h -= p * std::log2(p);
  return h;
}

/// H(class | coarse) - H(class | coarse + crop of the region's cell), in bits.
inline double information_gain(const SceneSpec& scene, const BoundingBox& seek_region, const GenParams& params) {
  double before = entropy_bits(class_posterior(observe(scene, std::nullopt), params));
  double after = entropy_bits(class_posterior(observe(scene, seek_region), params));
  return before - after;
}

/// Information accounting for one scene and seek choice, in bits.
///   required = H(class)             (what a zero-error answer must resolve)
///   input    = H(class) - H(class | coarse)
///   seek     = H(class | coarse) - H(class | coarse + crop)
/// `seek_reward` is scale * seek / required when input < required, else 0.
struct InformationAccount {
  double required = 0;
  double input = 0;
  double seek = 0;
  double total = 0;
  double seek_reward = 0;
};

inline InformationAccount information_account(const SceneSpec& scene, const std::optional<BoundingBox>& seek_region,
                                              const GenParams& params, double seek_scale_beta = 1.0) {
  InformationAccount acc;
  acc.required = entropy_bits(params.class_prior);
  double h_coarse = entropy_bits(class_posterior(observe(scene, std::nullopt), params));
  double h_seek = seek_region ? entropy_bits(class_posterior(observe(scene, seek_region), params)) : h_coarse;
  acc.input = acc.required - h_coarse;
  acc.seek = h_coarse - h_seek;
  acc.total = acc.input + acc.seek;
  if (acc.input < acc.required - 1e-12 && acc.required > 0) acc.seek_reward = seek_scale_beta * acc.seek / acc.required;
  return acc;
}

inline GroundTruth ground_truth(const SceneSpec& scene) {
  GroundTruth gt;
  gt.class_code = scene.class_code;
  if (scene.anomaly_rect) gt.boxes.push_back(*scene.anomaly_rect);
  gt.seek_required = scene.gt_seek;
  gt.seek_region = scene.gt_seek_region;
  gt.frame_dims = {static_cast<double>(scene.pixel_dim), static_cast<double>(scene.pixel_dim)};
  return gt;
}

}  // namespace a2seek
