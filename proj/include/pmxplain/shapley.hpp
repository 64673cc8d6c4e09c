// Shapley-value attribution over the flattened prefix vector chi, against an
// interventional value function built from a background sample of encoded
// prefixes: val(S) is the mean prediction over composites that take the
// features in S from the instance and everything else from a background
// prefix.
//
// Background prefixes are first masked to the instance's horizon: rows above
// the instance's first real event are zeroed and the composite length is the
// instance's, so the game is played only over the instance's real rows.
// A dimension is frozen (excluded from the game, psi = 0) when it is
// constant across the masked background AND equal to the instance's value;
// such a dimension has the instance's value in every composite by
// construction, which keeps both anchors exact:
//   val(empty set) == mean prediction over the stored background,
//   val(all active) == the prediction on the instance.
//
// Estimators: exact coalition enumeration (capped), and permutation sampling
// whose per-walk telescoping keeps the efficiency identity exact as well.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/encoding.hpp"
#include "pmxplain/predictor.hpp"

namespace pmxplain {

enum class ShapEstimator : uint8_t { exact, permutation };

struct ShapleyAttribution {
  std::vector<double> values;     // size max_len * width; 0 outside `active`
  std::vector<double> std_error;  // permutation estimator only (else empty)
  std::vector<int> active;        // flat indices that entered the game
  double base_value = 0.0;
  double prediction = 0.0;
  int max_len = 0, width = 0, length = 0;
  ShapEstimator estimator = ShapEstimator::exact;
  int samples = 0;
  uint64_t seed = 0;
};

class ValueFunction {
 public:
  // background must be non-empty and share the instance's schema.
  ValueFunction(const Predictor& model,
                std::span<const EncodedPrefix> background,
                const EncodedPrefix& instance)
      : model_(&model), inst_(instance.chi), max_len_(instance.max_len),
        width_(instance.width), length_(instance.length) {
    if (background.empty())
      throw ValidationError("value function: empty background set");
    size_t d = inst_.size();
    int first = instance.first_row();
    bg_.reserve(background.size());
    for (const auto& b : background) {
      if (b.schema_fingerprint != instance.schema_fingerprint ||
          b.chi.size() != d)
        throw ValidationError("value function: background/instance schema mismatch");
      std::vector<double> masked = b.chi;
      std::fill(masked.begin(), masked.begin() + size_t(first) * width_, 0.0);
      bg_.push_back(std::move(masked));
    }

    // Active = real-row dims that are not (constant across background and
    // equal to the instance). Frozen dims therefore hold the instance's
    // value in every composite.
    for (size_t i = size_t(first) * width_; i < d; ++i) {
      bool frozen = true;
      for (const auto& b : bg_)
        if (b[i] != inst_[i]) {
          frozen = false;
          break;
        }
      if (!frozen) active_.push_back(int(i));
    }

    double sum = 0.0;
    for (const auto& b : bg_) sum += model_->predict_flat(b, length_);
    base_ = sum / double(bg_.size());
    prediction_ = model_->predict_flat(inst_, length_);
  }

  const std::vector<int>& active() const { return active_; }
  double base_value() const { return base_; }
  double prediction() const { return prediction_; }
  int length() const { return length_; }
  int max_len() const { return max_len_; }
  int width() const { return width_; }
  size_t background_size() const { return bg_.size(); }
  const Predictor& model() const { return *model_; }
  const std::vector<double>& instance() const { return inst_; }
  const std::vector<double>& background(size_t b) const { return bg_[b]; }

  // Payout of a coalition (indices into active()). Not internally
  // synchronized; use one ValueFunction per concurrent attribution.
  double value_of(std::span<const int> coalition_positions) const {
    double sum = 0.0;
    std::vector<double> buf;
    for (const auto& b : bg_) {
      buf = b;
      for (int pos : coalition_positions) {
        int flat = active_.at(size_t(pos));
        buf[size_t(flat)] = inst_[size_t(flat)];
      }
      sum += model_->predict_flat(buf, length_);
    }
    return sum / double(bg_.size());
  }

  // Same payout, coalition given as flat feature indices.
  double value_of_flat(std::span<const int> coalition_flat) const {
    double sum = 0.0;
    std::vector<double> buf;
    for (const auto& b : bg_) {
      buf = b;
      for (int flat : coalition_flat) buf[size_t(flat)] = inst_[size_t(flat)];
      sum += model_->predict_flat(buf, length_);
    }
    return sum / double(bg_.size());
  }

 private:
  const Predictor* model_;
  std::vector<std::vector<double>> bg_;  // masked background composites
  std::vector<double> inst_;
  int max_len_, width_, length_;
  std::vector<int> active_;
  double base_ = 0.0, prediction_ = 0.0;
};

inline constexpr int kDefaultExactCap = 20;

namespace detail {

// Coalition weight |S|! (p-|S|-1)! / p! == 1 / (p * C(p-1, |S|)), computed
// from an exact Pascal row: binomials up to C(19, *) are exact in a double,
// which keeps the efficiency identity tight at the cap.
inline std::vector<double> coalition_weights(int p) {
  std::vector<double> binom(size_t(p), 1.0);  // C(p-1, s)
  for (int s = 1; s < p; ++s)
    binom[size_t(s)] = binom[size_t(s - 1)] * double(p - s) / double(s);
  std::vector<double> w(size_t(p), 0.0);
  for (int s = 0; s < p; ++s) w[size_t(s)] = 1.0 / (double(p) * binom[size_t(s)]);
  return w;
}

}  // namespace detail

// Exact Shapley values by full coalition enumeration. 2^p value calls, each
// costing one predictor call per background prefix; the cap guards the
// caller from an accidental 2^40.
inline ShapleyAttribution exact_shapley(const ValueFunction& vf,
                                        int exact_cap = kDefaultExactCap) {
  int p = int(vf.active().size());
  if (p > exact_cap)
    throw ValidationError(
        "exact Shapley with " + std::to_string(p) + " active features exceeds "
        "the cap of " + std::to_string(exact_cap) +
        "; use sampled_shapley instead");

  ShapleyAttribution out;
  out.max_len = vf.max_len();
  out.width = vf.width();
  out.length = vf.length();
  out.values.assign(size_t(vf.max_len()) * vf.width(), 0.0);
  out.active = vf.active();
  out.base_value = vf.base_value();
  out.prediction = vf.prediction();
  out.estimator = ShapEstimator::exact;
  if (p == 0) return out;

  // Payout of every coalition, indexed by bitmask over active positions.
  size_t n_masks = size_t(1) << p;
  std::vector<double> vals(n_masks);
  std::vector<int> members;
  members.reserve(size_t(p));
  for (size_t mask = 0; mask < n_masks; ++mask) {
    members.clear();
    for (int i = 0; i < p; ++i)
      if (mask >> i & 1) members.push_back(i);
    vals[mask] = vf.value_of(members);
  }

  std::vector<double> w = detail::coalition_weights(p);
  for (size_t mask = 0; mask < n_masks; ++mask) {
    double weight = w[size_t(__builtin_popcountll(mask))];
    for (int i = 0; i < p; ++i) {
      if (mask >> i & 1) continue;
      double marginal = vals[mask | (size_t(1) << i)] - vals[mask];
      out.values[size_t(vf.active()[size_t(i)])] += weight * marginal;
    }
  }
  return out;
}

// Permutation-sampling estimator: for each sampled permutation the features
// are flipped from background to instance values one by one and the
// prediction deltas accumulate as marginal contributions. Per-index standard
// errors come from the across-permutation variance of those marginals.
inline ShapleyAttribution sampled_shapley(const ValueFunction& vf, int samples,
                                          uint64_t seed) {
  if (samples < 1) throw ValidationError("sampled_shapley: samples must be >= 1");
  int p = int(vf.active().size());
  size_t d = size_t(vf.max_len()) * vf.width();

  ShapleyAttribution out;
  out.max_len = vf.max_len();
  out.width = vf.width();
  out.length = vf.length();
  out.values.assign(d, 0.0);
  out.std_error.assign(d, 0.0);
  out.active = vf.active();
  out.base_value = vf.base_value();
  out.prediction = vf.prediction();
  out.estimator = ShapEstimator::permutation;
  out.samples = samples;
  out.seed = seed;
  if (p == 0) return out;

  std::vector<int> perm(size_t(p), 0);
  for (int i = 0; i < p; ++i) perm[size_t(i)] = i;
  std::vector<double> marginal(size_t(p), 0.0);
  std::vector<double> sum(size_t(p), 0.0), sum_sq(size_t(p), 0.0);
  std::vector<double> buf(d);
  double inv_b = 1.0 / double(vf.background_size());

  for (int k = 0; k < samples; ++k) {
    Rng rng(Rng::mix(seed, uint64_t(k)));
    rng.shuffle(perm);
    std::fill(marginal.begin(), marginal.end(), 0.0);
    for (size_t b = 0; b < vf.background_size(); ++b) {
      buf = vf.background(b);
      double prev = vf.model().predict_flat(buf, vf.length());
      for (int pos : perm) {
        size_t flat = size_t(vf.active()[size_t(pos)]);
        buf[flat] = vf.instance()[flat];
        double cur = vf.model().predict_flat(buf, vf.length());
        marginal[size_t(pos)] += cur - prev;
        prev = cur;
      }
    }
    for (int i = 0; i < p; ++i) {
      double m = marginal[size_t(i)] * inv_b;
      sum[size_t(i)] += m;
      sum_sq[size_t(i)] += m * m;
    }
  }

  for (int i = 0; i < p; ++i) {
    size_t flat = size_t(vf.active()[size_t(i)]);
    double mean = sum[size_t(i)] / double(samples);
    out.values[flat] = mean;
    double var = std::max(0.0, sum_sq[size_t(i)] / double(samples) - mean * mean);
    out.std_error[flat] = std::sqrt(var / double(samples));
  }
  return out;
}

// CSV serialization of an attribution: one row per active feature.
inline std::string attribution_to_csv(const ShapleyAttribution& attr,
                                      const FeatureSchema& schema) {
  std::string out = "index,attribute,value,timestep_offset,psi\n";
  for (int flat : attr.active) {
    int row = flat / attr.width;
    int feature = flat % attr.width;
    int offset = row - (attr.max_len - 1);
    const FeatureDescriptor& f = schema.features[size_t(feature)];
    out += csv_join({std::to_string(flat), f.attribute,
                     f.kind == FeatureKind::onehot ? f.value : std::string(),
                     std::to_string(offset), format_g(attr.values[size_t(flat)])});
  }
  return out;
}

}  // namespace pmxplain
