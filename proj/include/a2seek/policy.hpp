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

// Factorized linear-softmax policy over structured actions:
//
//   pi(y | x) = Bernoulli(seek; w_seek . phi)
//             * [seek] Categorical(seek_cell; W_seek_cell phi)
//             * Categorical(class; W_class psi) * Categorical(answer_cell; W_answer_cell psi)
//             * Categorical(length; W_length psi)
//
// phi is computed from the coarse observation; psi appends features of the
// crop the action chose (zeros without a seek). All gradients are closed form.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2seek/actions.hpp"
#include "a2seek/rng.hpp"
#include "a2seek/seekenv.hpp"

namespace a2seek {

/// Dense row-major matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols), static_cast<std::size_t>(cols)};
  }

  /// this[r] += scale * v (v has `cols` entries)
  void add_row(int r, double scale, std::span<const double> v) {
    double* dst = data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    for (int c = 0; c < cols; ++c) dst[c] += scale * v[static_cast<std::size_t>(c)];
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Fixed featurizer. Pre-seek features phi:
///   [1, cell means (G^2), one-hot of the brightest cell (G^2), one-hot of the
///    brightest cell's pixel mass in unit bins (kMassBins)]
/// Post-seek features psi = phi followed by
///   [seek indicator, crop pixels ((P/G)^2), horizontal and vertical
///    neighbour co-activation of the crop, one-hot of the sought cell (G^2)]
struct FeatureMap {
  static constexpr int kMassBins = 32;

  int coarse_dim = 4;
  int pixel_dim = 16;

  explicit FeatureMap(const GenParams& params) : coarse_dim(params.coarse_dim), pixel_dim(params.pixel_dim) {}

  int cells() const { return coarse_dim * coarse_dim; }
  int crop_pixels() const { return (pixel_dim / coarse_dim) * (pixel_dim / coarse_dim); }
  int pre_dim() const { return 1 + 2 * cells() + kMassBins; }
  int post_dim() const { return pre_dim() + 1 + crop_pixels() + 2 + cells(); }

  std::vector<double> pre(const Observation& obs) const {
    std::vector<double> f(static_cast<std::size_t>(pre_dim()), 0.0);
    const int n = cells();
    f[0] = 1.0;
    int brightest = 0;
    for (int c = 0; c < n; ++c) {
      f[static_cast<std::size_t>(1 + c)] = obs.coarse_features[static_cast<std::size_t>(c)];
      if (obs.coarse_features[static_cast<std::size_t>(c)] > obs.coarse_features[static_cast<std::size_t>(brightest)]) brightest = c;
    }
    f[static_cast<std::size_t>(1 + n + brightest)] = 1.0;
    double mass = obs.coarse_features[static_cast<std::size_t>(brightest)] * crop_pixels();
    int bin = std::clamp(static_cast<int>(std::floor(mass)), 0, kMassBins - 1);
    f[static_cast<std::size_t>(1 + 2 * n + bin)] = 1.0;
    return f;
  }

  std::vector<double> post(const Observation& obs) const {
    std::vector<double> f = pre(obs);
    f.resize(static_cast<std::size_t>(post_dim()), 0.0);
    if (!obs.seek_cell) return f;
    std::size_t base = static_cast<std::size_t>(pre_dim());
    f[base] = 1.0;
    const int side = pixel_dim / coarse_dim;
    double horizontal = 0;
    double vertical = 0;
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        double v = obs.seek_features[static_cast<std::size_t>(i * side + j)];
        f[base + 1 + static_cast<std::size_t>(i * side + j)] = v;
        if (j + 1 < side) horizontal += v * obs.seek_features[static_cast<std::size_t>(i * side + j + 1)];
        if (i + 1 < side) vertical += v * obs.seek_features[static_cast<std::size_t>((i + 1) * side + j)];
      }
    }
    f[base + 1 + static_cast<std::size_t>(crop_pixels())] = horizontal;
    f[base + 2 + static_cast<std::size_t>(crop_pixels())] = vertical;
    f[base + 3 + static_cast<std::size_t>(crop_pixels() + *obs.seek_cell)] = 1.0;
    return f;
  }
};

/// Policy weights. The same type carries gradients.
struct PolicyParams {
  int coarse_dim = 4;
  int pixel_dim = 16;
  int num_classes = 5;
  Matrix seek;         // 1 x pre_dim
  Matrix seek_cell;    // cells x pre_dim
  Matrix class_head;   // classes x post_dim
  Matrix answer_cell;  // cells x post_dim
  Matrix length;       // 3 x post_dim

  static PolicyParams zeros(const GenParams& params) {
    FeatureMap fm(params);
    PolicyParams p;
    p.coarse_dim = params.coarse_dim;
    p.pixel_dim = params.pixel_dim;
    p.num_classes = params.num_classes();
    p.seek = Matrix(1, fm.pre_dim());
    p.seek_cell = Matrix(fm.cells(), fm.pre_dim());
    p.class_head = Matrix(p.num_classes, fm.post_dim());
    p.answer_cell = Matrix(fm.cells(), fm.post_dim());
    p.length = Matrix(kNumLengthBuckets, fm.post_dim());
    return p;
  }

  PolicyParams zeros_like() const {
    PolicyParams p = *this;
    for (Matrix* m : p.heads()) std::fill(m->data.begin(), m->data.end(), 0.0);
    return p;
  }

  std::array<Matrix*, 5> heads() { return {&seek, &seek_cell, &class_head, &answer_cell, &length}; }
  std::array<const Matrix*, 5> heads() const { return {&seek, &seek_cell, &class_head, &answer_cell, &length}; }
  static constexpr std::array<const char*, 5> head_names() { return {"seek", "seek_cell", "class", "answer_cell", "length"}; }

  std::size_t size() const {
    std::size_t n = 0;
    for (const Matrix* m : heads()) n += m->data.size();
    return n;
  }

  /// Flat view for finite differences and norms: visits every weight.
  void for_each(const std::function<void(double&)>& fn) {
    for (Matrix* m : heads())
      for (double& v : m->data) fn(v);
  }

  /// this += scale * other
  void axpy(double scale, const PolicyParams& other) {
    auto dst = heads();
    auto src = other.heads();
    for (std::size_t h = 0; h < dst.size(); ++h) {
      if (dst[h]->data.size() != src[h]->data.size()) throw std::invalid_argument("ShapeMismatch: axpy");
      for (std::size_t i = 0; i < dst[h]->data.size(); ++i) dst[h]->data[i] += scale * src[h]->data[i];
    }
  }

  double dot(const PolicyParams& other) const {
    double s = 0;
    auto a = heads();
    auto b = other.heads();
    for (std::size_t h = 0; h < a.size(); ++h)
      for (std::size_t i = 0; i < a[h]->data.size(); ++i) s += a[h]->data[i] * b[h]->data[i];
    return s;
  }

  double norm() const { return std::sqrt(dot(*this)); }

  bool finite() const {
    for (const Matrix* m : heads())
      for (double v : m->data)
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// Throws std::invalid_argument ("ShapeMismatch") unless shapes fit params.
  void check_shape(const GenParams& params) const {
    PolicyParams expect = zeros(params);
    auto a = heads();
    auto b = expect.heads();
    for (std::size_t h = 0; h < a.size(); ++h)
      if (a[h]->rows != b[h]->rows || a[h]->cols != b[h]->cols || a[h]->data.size() != b[h]->data.size())
        throw std::invalid_argument(std::string("ShapeMismatch: head ") + head_names()[h]);
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

namespace policy_detail {

inline std::vector<double> logits(const Matrix& w, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(w.rows));
  for (int r = 0; r < w.rows; ++r) out[static_cast<std::size_t>(r)] = dot(w.row(r), x);
  return out;
}

inline std::vector<double> log_softmax(const std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (double v : z) s += std::exp(v - m);
  double lse = m + std::log(s);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

inline double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline std::vector<double> exp_all(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]);
  return out;
}

}  // namespace policy_detail

/// Features of one scene: phi and psi for every seek context. Context 0 is
/// "no seek", context 1 + k is a seek of cell k.
struct SceneFeatures {
  std::vector<double> pre;
  std::vector<std::vector<double>> post;

  SceneFeatures(const SceneSpec& scene, const GenParams& params) {
    FeatureMap fm(params);
    pre = fm.pre(observe_cell(scene, std::nullopt));
    post.push_back(fm.post(observe_cell(scene, std::nullopt)));
    for (int c = 0; c < params.num_cells(); ++c) post.push_back(fm.post(observe_cell(scene, c)));
  }

  static std::size_t context_of(const StructuredAction& a) { return a.seek ? 1 + static_cast<std::size_t>(*a.seek_cell) : 0; }
};

/// Per-head log-probabilities of one action.
struct LogProbParts {
  double seek = 0;
  double seek_cell = 0;
  double class_code = 0;
  double answer_cell = 0;
  double length = 0;
  double total() const { return seek + seek_cell + class_code + answer_cell + length; }
};

/// Every head distribution of the policy on one scene, for all contexts.
class PolicyDistribution {
 public:
  PolicyDistribution(const PolicyParams& params, const SceneFeatures& features, const GenParams& gen)
      : space_(gen) {
    using namespace policy_detail;
    params.check_shape(gen);
    double z = dot(params.seek.row(0), features.pre);
    log_seek_ = log_sigmoid(z);
    log_no_seek_ = log_sigmoid(-z);
    p_seek_ = sigmoid(z);
    log_seek_cell_ = log_softmax(logits(params.seek_cell, features.pre));
    for (const auto& psi : features.post) {
      log_class_.push_back(log_softmax(logits(params.class_head, psi)));
      log_answer_.push_back(log_softmax(logits(params.answer_cell, psi)));
      log_length_.push_back(log_softmax(logits(params.length, psi)));
    }
  }

  const ActionSpace& space() const { return space_; }
  double p_seek() const { return p_seek_; }
  const std::vector<double>& log_seek_cell() const { return log_seek_cell_; }
  const std::vector<double>& log_class(std::size_t ctx) const { return log_class_[ctx]; }
  const std::vector<double>& log_answer(std::size_t ctx) const { return log_answer_[ctx]; }
  const std::vector<double>& log_length(std::size_t ctx) const { return log_length_[ctx]; }

  LogProbParts parts(const StructuredAction& a) const {
    if (!a.consistent()) throw std::invalid_argument("log_prob: seek_cell must be present iff seek");
    int ci = space_.class_index(a.class_code);
    if (ci < 0 || a.answer_cell < 0 || a.answer_cell >= space_.num_cells() ||
        (a.seek && (*a.seek_cell < 0 || *a.seek_cell >= space_.num_cells())))
      throw std::invalid_argument("ShapeMismatch: action outside the policy's action space");
    std::size_t ctx = SceneFeatures::context_of(a);
    LogProbParts p;
    p.seek = a.seek ? log_seek_ : log_no_seek_;
    if (a.seek) p.seek_cell = log_seek_cell_[static_cast<std::size_t>(*a.seek_cell)];
    p.class_code = log_class_[ctx][static_cast<std::size_t>(ci)];
    p.answer_cell = log_answer_[ctx][static_cast<std::size_t>(a.answer_cell)];
    p.length = log_length_[ctx][static_cast<std::size_t>(a.length)];
    return p;
  }

  double log_prob(const StructuredAction& a) const { return parts(a).total(); }

  /// log pi for every action index of the space.
  std::vector<double> all_log_probs() const {
    std::vector<double> out(space_.size());
    const auto C = static_cast<std::size_t>(space_.num_classes());
    const auto G = static_cast<std::size_t>(space_.num_cells());
    std::size_t i = 0;
    for (std::size_t slot = 0; slot < static_cast<std::size_t>(space_.num_slots()); ++slot) {
      double head = slot == 0 ? log_no_seek_ : log_seek_ + log_seek_cell_[slot - 1];
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t a = 0; a < G; ++a)
          for (std::size_t l = 0; l < kNumLengthBuckets; ++l)
            out[i++] = head + log_class_[slot][c] + log_answer_[slot][a] + log_length_[slot][l];
    }
    return out;
  }

  std::vector<double> all_probs() const { return policy_detail::exp_all(all_log_probs()); }

 private:
  ActionSpace space_;
  double log_seek_ = 0;
  double log_no_seek_ = 0;
  double p_seek_ = 0.5;
  std::vector<double> log_seek_cell_;
  std::vector<std::vector<double>> log_class_;
  std::vector<std::vector<double>> log_answer_;
  std::vector<std::vector<double>> log_length_;
};

inline double log_prob(const PolicyParams& params, const SceneSpec& scene, const StructuredAction& action,
                       const GenParams& gen) {
  SceneFeatures f(scene, gen);
  return PolicyDistribution(params, f, gen).log_prob(action);
}

namespace policy_detail {

// grad[row] += scale * (onehot(k) - probs) x features, restricted to `rows`.
inline void add_softmax_score(Matrix& grad, const std::vector<double>& log_probs, std::size_t k, double scale,
                              std::span<const double> features) {
  for (int r = 0; r < grad.rows; ++r) {
    double coef = (static_cast<std::size_t>(r) == k ? 1.0 : 0.0) - std::exp(log_probs[static_cast<std::size_t>(r)]);
    if (coef != 0) grad.add_row(r, scale * coef, features);
  }
}

// grad[row] += (g[row] - total * probs[row]) x features
inline void add_aggregated_score(Matrix& grad, const std::vector<double>& log_probs, const std::vector<double>& g,
                                 double total, std::span<const double> features) {
  for (int r = 0; r < grad.rows; ++r) {
    double coef = g[static_cast<std::size_t>(r)] - total * std::exp(log_probs[static_cast<std::size_t>(r)]);
    if (coef != 0) grad.add_row(r, coef, features);
  }
}

}  // namespace policy_detail

/// Analytic gradient of log pi(action | scene) with the shape of params.
inline PolicyParams grad_log_prob(const PolicyParams& params, const SceneFeatures& features,
                                  const PolicyDistribution& dist, const StructuredAction& a) {
  using namespace policy_detail;
  PolicyParams g = params.zeros_like();
  std::size_t ctx = SceneFeatures::context_of(a);
  g.seek.add_row(0, (a.seek ? 1.0 : 0.0) - dist.p_seek(), features.pre);
  if (a.seek) add_softmax_score(g.seek_cell, dist.log_seek_cell(), static_cast<std::size_t>(*a.seek_cell), 1.0, features.pre);
  const auto& psi = features.post[ctx];
  add_softmax_score(g.class_head, dist.log_class(ctx), static_cast<std::size_t>(dist.space().class_index(a.class_code)), 1.0, psi);
  add_softmax_score(g.answer_cell, dist.log_answer(ctx), static_cast<std::size_t>(a.answer_cell), 1.0, psi);
  add_softmax_score(g.length, dist.log_length(ctx), static_cast<std::size_t>(a.length), 1.0, psi);
  return g;
}

inline PolicyParams grad_log_prob(const PolicyParams& params, const SceneSpec& scene, const StructuredAction& a,
                                  const GenParams& gen) {
  SceneFeatures f(scene, gen);
  PolicyDistribution d(params, f, gen);
  (void)d.parts(a);
  return grad_log_prob(params, f, d, a);
}

/// sum_y pi(y) * weight[y] * grad log pi(y), exactly, without materializing
/// one gradient per action. `weights` is indexed like ActionSpace.
inline PolicyParams weighted_score_sum(const PolicyParams& params, const SceneFeatures& features,
                                       const PolicyDistribution& dist, const std::vector<double>& weights) {
  using namespace policy_detail;
  const ActionSpace& space = dist.space();
  if (weights.size() != space.size()) throw std::invalid_argument("weighted_score_sum: one weight per action required");
  const auto C = static_cast<std::size_t>(space.num_classes());
  const auto G = static_cast<std::size_t>(space.num_cells());
  const auto slots = static_cast<std::size_t>(space.num_slots());
  const std::vector<double> probs = dist.all_probs();

  double seek_coef = 0;
  std::vector<double> g_seek_cell(G, 0.0);
  double t_seek_cell = 0;
  PolicyParams g = params.zeros_like();
  std::size_t i = 0;
  for (std::size_t slot = 0; slot < slots; ++slot) {
    std::vector<double> gc(C, 0.0), ga(G, 0.0), gl(kNumLengthBuckets, 0.0);
    double t = 0;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t a = 0; a < G; ++a)
        for (std::size_t l = 0; l < kNumLengthBuckets; ++l, ++i) {
          double w = probs[i] * weights[i];
          gc[c] += w;
          ga[a] += w;
          gl[l] += w;
          t += w;
        }
    seek_coef += t * ((slot > 0 ? 1.0 : 0.0) - dist.p_seek());
    if (slot > 0) {
      g_seek_cell[slot - 1] += t;
      t_seek_cell += t;
    }
    const auto& psi = features.post[slot];
    add_aggregated_score(g.class_head, dist.log_class(slot), gc, t, psi);
    add_aggregated_score(g.answer_cell, dist.log_answer(slot), ga, t, psi);
    add_aggregated_score(g.length, dist.log_length(slot), gl, t, psi);
  }
  g.seek.add_row(0, seek_coef, features.pre);
  add_aggregated_score(g.seek_cell, dist.log_seek_cell(), g_seek_cell, t_seek_cell, features.pre);
  return g;
}

/// Ancestral sample through the factorization.
inline StructuredAction sample_action(const PolicyDistribution& dist, Rng& rng) {
  const ActionSpace& space = dist.space();
  StructuredAction a;
  a.seek = rng.bernoulli(dist.p_seek());
  if (a.seek) a.seek_cell = static_cast<int>(rng.categorical(policy_detail::exp_all(dist.log_seek_cell())));
  std::size_t ctx = SceneFeatures::context_of(a);
  std::size_t ci = rng.categorical(policy_detail::exp_all(dist.log_class(ctx)));
  a.class_code = space.class_at(ci);
  a.answer_cell = static_cast<int>(rng.categorical(policy_detail::exp_all(dist.log_answer(ctx))));
  a.length = static_cast<LengthBucket>(rng.categorical(policy_detail::exp_all(dist.log_length(ctx))));
  return a;
}

inline StructuredAction sample_action(const PolicyParams& params, const SceneSpec& scene, const GenParams& gen, Rng& rng) {
  SceneFeatures f(scene, gen);
  return sample_action(PolicyDistribution(params, f, gen), rng);
}

/// Mode of each head in sampling order (seek iff p > 0.5; ties take the lowest index).
inline StructuredAction greedy_action(const PolicyDistribution& dist) {
  auto argmax = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  };
  const ActionSpace& space = dist.space();
  StructuredAction a;
  a.seek = dist.p_seek() > 0.5;
  if (a.seek) a.seek_cell = static_cast<int>(argmax(dist.log_seek_cell()));
  std::size_t ctx = SceneFeatures::context_of(a);
  std::size_t ci = argmax(dist.log_class(ctx));
  a.class_code = space.class_at(ci);
  a.answer_cell = static_cast<int>(argmax(dist.log_answer(ctx)));
  a.length = static_cast<LengthBucket>(argmax(dist.log_length(ctx)));
  return a;
}

/// Probability of the class head choosing `code` given the action's context.
inline double class_probability(const PolicyDistribution& dist, const StructuredAction& a) {
  std::size_t ctx = SceneFeatures::context_of(a);
  return std::exp(dist.log_class(ctx)[static_cast<std::size_t>(dist.space().class_index(a.class_code))]);
}

/// sum_y pi(y | x) R(x, y) over the full action space.
inline double exact_expected_reward(const PolicyDistribution& dist, const RewardTable& table) {
  std::vector<double> probs = dist.all_probs();
  double s = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += probs[i] * table.total(i);
  return s;
}

inline double exact_expected_reward(const PolicyParams& params, const SceneSpec& scene, const GenParams& gen,
                                    const RewardConfig& cfg) {
  SceneFeatures f(scene, gen);
  return exact_expected_reward(PolicyDistribution(params, f, gen), RewardTable(scene, gen, cfg));
}

/// Exact gradient of the expected reward on one scene.
inline PolicyParams exact_reward_gradient(const PolicyParams& params, const SceneFeatures& features,
                                          const PolicyDistribution& dist, const RewardTable& table) {
  return weighted_score_sum(params, features, dist, table.totals());
}

struct ReflectConfig {
  double lambda = 1.0;
};

/// Reflection as exponential tilting of the policy:
///   P(y~ | x, y0) proportional to pi(y~ | x) * exp(lambda * (R_cls(y~) - R_cls(y0)))
/// with the normalized log-probability as the score. Indexed like ActionSpace.
inline std::vector<double> reflect(const PolicyDistribution& dist, const RewardTable& table, const StructuredAction& y0,
                                   const ReflectConfig& cfg) {
  if (!(cfg.lambda >= 0) || !std::isfinite(cfg.lambda)) throw std::invalid_argument("reflect: lambda must be finite and >= 0");
  std::vector<double> logp = dist.all_log_probs();
  double r0 = table.accuracy(dist.space().index_of(y0));
  std::vector<double> score(logp.size());
  double m = -INFINITY;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    score[i] = logp[i] + cfg.lambda * (table.accuracy(i) - r0);
    m = std::max(m, score[i]);
  }
  double z = 0;
  for (double& s : score) {
    s = std::exp(s - m);
    z += s;
  }
  for (double& s : score) s /= z;
  return score;
}

/// Expected classification reward under a distribution indexed like ActionSpace.
inline double expected_accuracy(const std::vector<double>& probs, const RewardTable& table) {
  double s = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += probs[i] * table.accuracy(i);
  return s;
}

}  // namespace a2seek
