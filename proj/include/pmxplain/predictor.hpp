// Pluggable predictors over encoded prefixes. Three reference
// implementations ship:
//   mean      - training mean (regression) / positive rate (binary);
//   linear    - ridge least squares / logistic regression over the flattened
//               padded prefix vector chi;
//   recurrent - single-layer tanh RNN with a linear or sigmoid head, Adam,
//               and early stopping on validation loss.
// All are deterministic given the fit seed. Fitted predictors are immutable
// and safe for concurrent predict calls.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"
#include "pmxplain/encoding.hpp"
#include "pmxplain/event_log.hpp"
#include "pmxplain/metrics.hpp"

namespace pmxplain {

class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual TaskKind task() const = 0;
  virtual std::string kind() const = 0;

  // Validation items steer early stopping / model selection only; they never
  // contribute gradient updates.
  virtual void fit(const std::vector<const DataItem*>& train,
                   const std::vector<const DataItem*>& validation,
                   uint64_t seed) = 0;

  // Raw prediction over the flattened chi; `length` is the count of real
  // (non-padding) trailing rows. Binary predictors return a probability.
  virtual double predict_flat(std::span<const double> chi, int length) const = 0;

  double predict(const EncodedPrefix& x) const {
    require_fitted();
    if (x.schema_fingerprint != schema_fp_)
      throw RuntimeError("schema fingerprint mismatch: prefix " +
                         hex64(x.schema_fingerprint) + " vs model " +
                         hex64(schema_fp_));
    // The fingerprint pins the feature layout but not the window: reject
    // prefixes padded to a different geometry than the model was fit on.
    if (x.max_len != max_len_ || x.width != width_)
      throw RuntimeError("prefix geometry " + std::to_string(x.max_len) + "x" +
                         std::to_string(x.width) + " does not match model " +
                         std::to_string(max_len_) + "x" +
                         std::to_string(width_));
    return predict_flat(x.chi, x.length);
  }

  virtual void save_params(std::ostream& os) const = 0;
  virtual void load_params(std::istream& is) = 0;

  bool fitted() const { return fitted_; }
  uint64_t schema_fingerprint() const { return schema_fp_; }
  int max_len() const { return max_len_; }
  int width() const { return width_; }

  void bind_schema(uint64_t fp, int max_len, int width) {
    schema_fp_ = fp;
    max_len_ = max_len;
    width_ = width;
  }

 protected:
  void require_fitted() const {
    if (!fitted_) throw RuntimeError("predictor used before fit");
  }
  void adopt_shape(const std::vector<const DataItem*>& train) {
    if (train.empty()) throw ValidationError("fit: empty training set");
    bind_schema(train.front()->x.schema_fingerprint, train.front()->x.max_len,
                train.front()->x.width);
    for (const auto* it : train)
      if (it->x.schema_fingerprint != schema_fp_)
        throw ValidationError("fit: training items span multiple schemas");
  }
  static bool degenerate_targets(const std::vector<const DataItem*>& train) {
    for (const auto* it : train)
      if (it->y != train.front()->y) return false;
    return true;
  }

  uint64_t schema_fp_ = 0;
  int max_len_ = 0, width_ = 0;
  bool fitted_ = false;
};

inline std::vector<double> predict_batch(
    const Predictor& model, std::span<const EncodedPrefix> prefixes) {
  std::vector<double> out;
  out.reserve(prefixes.size());
  for (const auto& x : prefixes) out.push_back(model.predict(x));
  return out;
}

// ---------------------------------------------------------------------------
// Mean / majority baseline
// ---------------------------------------------------------------------------

class MeanPredictor final : public Predictor {
 public:
  explicit MeanPredictor(TaskKind task) : task_(task) {}

  TaskKind task() const override { return task_; }
  std::string kind() const override { return "mean"; }

  void fit(const std::vector<const DataItem*>& train,
           const std::vector<const DataItem*>&, uint64_t) override {
    adopt_shape(train);
    double sum = 0.0;
    for (const auto* it : train) sum += it->y;
    value_ = sum / double(train.size());
    fitted_ = true;
  }

  double predict_flat(std::span<const double>, int) const override {
    return value_;
  }

  void save_params(std::ostream& os) const override { write_f64(os, value_); }
  void load_params(std::istream& is) override {
    value_ = read_f64(is);
    fitted_ = true;
  }

 private:
  TaskKind task_;
  double value_ = 0.0;
};

// ---------------------------------------------------------------------------
// Linear / logistic model over the flattened chi
// ---------------------------------------------------------------------------

struct LinearHyper {
  double ridge = 1e-9;        // relative to the mean Gram diagonal
  double logistic_lr = 1.0;
  int logistic_epochs = 300;
  int logistic_patience = 20;
};

namespace detail {

// Cholesky solve of the SPD system A x = b, destroying A. Returns false when
// a pivot collapses.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b,
                           int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[size_t(j) * n + j];
    for (int k = 0; k < j; ++k) d -= a[size_t(j) * n + k] * a[size_t(j) * n + k];
    if (d <= 0.0) return false;
    double l = std::sqrt(d);
    a[size_t(j) * n + j] = l;
    for (int i = j + 1; i < n; ++i) {
      double s = a[size_t(i) * n + j];
      for (int k = 0; k < j; ++k)
        s -= a[size_t(i) * n + k] * a[size_t(j) * n + k];
      a[size_t(i) * n + j] = s / l;
    }
  }
  for (int i = 0; i < n; ++i) {  // L y = b
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[size_t(i) * n + k] * b[k];
    b[i] = s / a[size_t(i) * n + i];
  }
  for (int i = n; i-- > 0;) {  // L^T x = y
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= a[size_t(k) * n + i] * b[k];
    b[i] = s / a[size_t(i) * n + i];
  }
  return true;
}

inline double sigmoid(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

class LinearPredictor final : public Predictor {
 public:
  explicit LinearPredictor(TaskKind task, LinearHyper hyper = {})
      : task_(task), hyper_(hyper) {}

  TaskKind task() const override { return task_; }
  std::string kind() const override { return "linear"; }

  void fit(const std::vector<const DataItem*>& train,
           const std::vector<const DataItem*>& validation,
           uint64_t /*seed*/) override {
    adopt_shape(train);
    int d = max_len_ * width_;
    weights_.assign(size_t(d), 0.0);
    intercept_ = train.front()->y;
    if (degenerate_targets(train)) {
      std::cerr << "warning: all training targets identical; fitted a constant "
                   "predictor\n";
      fitted_ = true;
      return;
    }
    if (task_ == TaskKind::regression)
      fit_least_squares(train);
    else
      fit_logistic(train, validation);
    fitted_ = true;
  }

  double predict_flat(std::span<const double> chi, int) const override {
    double z = intercept_;
    const double* w = weights_.data();
    for (size_t i = 0; i < weights_.size(); ++i) z += w[i] * chi[i];
    return task_ == TaskKind::binary ? detail::sigmoid(z) : z;
  }

  void save_params(std::ostream& os) const override {
    write_f64(os, intercept_);
    write_u64(os, weights_.size());
    for (double w : weights_) write_f64(os, w);
  }
  void load_params(std::istream& is) override {
    intercept_ = read_f64(is);
    weights_.resize(size_t(read_u64(is)));
    for (double& w : weights_) w = read_f64(is);
    fitted_ = true;
  }

 private:
  // Nonzero indices of an item's chi; the Gram accumulation walks only these.
  static std::vector<int> nonzeros(const EncodedPrefix& x) {
    std::vector<int> nz;
    for (int i = 0; i < int(x.chi.size()); ++i)
      if (x.chi[i] != 0.0) nz.push_back(i);
    return nz;
  }

  void fit_least_squares(const std::vector<const DataItem*>& train) {
    int d = max_len_ * width_ + 1;  // +1: intercept as a constant feature
    std::vector<double> gram(size_t(d) * d, 0.0), rhs(size_t(d), 0.0);
    for (const auto* item : train) {
      std::vector<int> nz = nonzeros(item->x);
      nz.push_back(d - 1);  // the constant 1
      auto value = [&](int i) {
        return i == d - 1 ? 1.0 : item->x.chi[size_t(i)];
      };
      for (int a : nz) {
        double va = value(a);
        rhs[size_t(a)] += va * item->y;
        for (int b : nz)
          if (b >= a) gram[size_t(a) * d + b] += va * value(b);
      }
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < i; ++j) gram[size_t(i) * d + j] = gram[size_t(j) * d + i];

    double diag_mean = 0.0;
    for (int i = 0; i < d; ++i) diag_mean += gram[size_t(i) * d + i];
    diag_mean = std::max(diag_mean / d, 1e-300);

    double lambda = hyper_.ridge * diag_mean;
    for (int attempt = 0; attempt < 6; ++attempt) {
      std::vector<double> a = gram, b = rhs;
      for (int i = 0; i < d; ++i) a[size_t(i) * d + i] += lambda;
      if (detail::cholesky_solve(a, b, d)) {
        weights_.assign(b.begin(), b.end() - 1);
        intercept_ = b.back();
        return;
      }
      lambda = std::max(lambda * 100.0, 1e-12 * diag_mean);
    }
    throw RuntimeError("linear fit: normal equations remained singular");
  }

  void fit_logistic(const std::vector<const DataItem*>& train,
                    const std::vector<const DataItem*>& validation) {
    int d = max_len_ * width_;
    weights_.assign(size_t(d), 0.0);
    intercept_ = 0.0;
    std::vector<std::vector<int>> nz(train.size());
    for (size_t i = 0; i < train.size(); ++i) nz[i] = nonzeros(train[i]->x);

    std::vector<double> best_w = weights_;
    double best_bias = intercept_, best_val = val_loss(validation);
    int waited = 0;
    std::vector<double> grad(size_t(d), 0.0);
    for (int epoch = 0; epoch < hyper_.logistic_epochs; ++epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_bias = 0.0;
      for (size_t i = 0; i < train.size(); ++i) {
        const auto& x = train[i]->x.chi;
        double z = intercept_;
        for (int j : nz[i]) z += weights_[size_t(j)] * x[size_t(j)];
        double err = detail::sigmoid(z) - train[i]->y;
        for (int j : nz[i]) grad[size_t(j)] += err * x[size_t(j)];
        grad_bias += err;
      }
      double scale = hyper_.logistic_lr / double(train.size());
      for (int j = 0; j < d; ++j) weights_[size_t(j)] -= scale * grad[size_t(j)];
      intercept_ -= scale * grad_bias;

      if (!validation.empty()) {
        double v = val_loss(validation);
        if (v < best_val - 1e-12) {
          best_val = v;
          best_w = weights_;
          best_bias = intercept_;
          waited = 0;
        } else if (++waited > hyper_.logistic_patience) {
          break;
        }
      }
    }
    if (!validation.empty()) {
      weights_ = best_w;
      intercept_ = best_bias;
    }
  }

  double val_loss(const std::vector<const DataItem*>& validation) const {
    if (validation.empty()) return 0.0;
    double loss = 0.0;
    for (const auto* item : validation) {
      double z = intercept_;
      for (size_t j = 0; j < weights_.size(); ++j)
        z += weights_[j] * item->x.chi[j];
      double p = std::clamp(detail::sigmoid(z), 1e-12, 1.0 - 1e-12);
      loss += item->y >= 0.5 ? -std::log(p) : -std::log(1.0 - p);
    }
    return loss / double(validation.size());
  }

  TaskKind task_;
  LinearHyper hyper_;
  std::vector<double> weights_;
  double intercept_ = 0.0;
};

// ---------------------------------------------------------------------------
// Single-layer recurrent network
// ---------------------------------------------------------------------------

struct RecurrentHyper {
  int hidden = 16;
  double learning_rate = 0.02;
  int epochs = 200;
  int patience = 10;
  int batch_size = 32;
  double clip_norm = 5.0;
};

class RecurrentPredictor final : public Predictor {
 public:
  explicit RecurrentPredictor(TaskKind task, RecurrentHyper hyper = {})
      : task_(task), hyper_(hyper) {}

  TaskKind task() const override { return task_; }
  std::string kind() const override { return "recurrent"; }

  void fit(const std::vector<const DataItem*>& train,
           const std::vector<const DataItem*>& validation,
           uint64_t seed) override {
    adopt_shape(train);
    hidden_ = hyper_.hidden;
    init_params(seed);

    // Regression targets are standardized internally; predictions are mapped
    // back. Degenerate targets reduce to a constant head.
    y_mean_ = 0.0;
    y_std_ = 1.0;
    if (task_ == TaskKind::regression) {
      double s = 0.0, s2 = 0.0;
      for (const auto* it : train) s += it->y;
      y_mean_ = s / double(train.size());
      for (const auto* it : train) s2 += (it->y - y_mean_) * (it->y - y_mean_);
      y_std_ = std::sqrt(s2 / double(train.size()));
    }
    if (degenerate_targets(train) ||
        (task_ == TaskKind::regression && y_std_ == 0.0)) {
      std::cerr << "warning: all training targets identical; fitted a constant "
                   "predictor\n";
      std::fill(theta_.begin(), theta_.end(), 0.0);
      if (task_ == TaskKind::binary) {
        // sigmoid(bo) == the constant class value
        theta_.back() = train.front()->y >= 0.5 ? 30.0 : -30.0;
        y_mean_ = 0.0;
        y_std_ = 1.0;
      } else {
        y_mean_ = train.front()->y;
        y_std_ = 1.0;
      }
      fitted_ = true;
      return;
    }
    if (y_std_ == 0.0) y_std_ = 1.0;

    train_adam(train, validation, seed);
    fitted_ = true;
  }

  double predict_flat(std::span<const double> chi, int length) const override {
    // Attribution engines call this millions of times; keep the hidden-state
    // scratch per thread instead of allocating per call.
    thread_local std::vector<double> h, scratch;
    h.assign(size_t(hidden_), 0.0);
    scratch.assign(size_t(hidden_), 0.0);
    forward(chi, length, h, scratch, nullptr);
    double out = bo();
    for (int k = 0; k < hidden_; ++k) out += wo()[k] * h[size_t(k)];
    if (task_ == TaskKind::binary) return detail::sigmoid(out);
    return y_mean_ + y_std_ * out;
  }

  void save_params(std::ostream& os) const override {
    write_u32(os, uint32_t(hidden_));
    write_f64(os, y_mean_);
    write_f64(os, y_std_);
    write_u64(os, theta_.size());
    for (double v : theta_) write_f64(os, v);
  }
  void load_params(std::istream& is) override {
    hidden_ = int(read_u32(is));
    y_mean_ = read_f64(is);
    y_std_ = read_f64(is);
    theta_.resize(size_t(read_u64(is)));
    for (double& v : theta_) v = read_f64(is);
    fitted_ = true;
  }

 private:
  // Parameter block offsets inside theta_.
  size_t wx_off() const { return 0; }
  size_t wh_off() const { return size_t(hidden_) * width_; }
  size_t bh_off() const { return wh_off() + size_t(hidden_) * hidden_; }
  size_t wo_off() const { return bh_off() + size_t(hidden_); }
  size_t bo_off() const { return wo_off() + size_t(hidden_); }
  const double* wx() const { return theta_.data() + wx_off(); }
  const double* wh() const { return theta_.data() + wh_off(); }
  const double* bh() const { return theta_.data() + bh_off(); }
  const double* wo() const { return theta_.data() + wo_off(); }
  double bo() const { return theta_[bo_off()]; }

  void init_params(uint64_t seed) {
    theta_.assign(bo_off() + 1, 0.0);
    Rng rng(Rng::mix(seed, 0x52454355));
    double sx = 1.0 / std::sqrt(double(std::max(1, width_)));
    double sh = 1.0 / std::sqrt(double(hidden_));
    for (size_t i = 0; i < size_t(hidden_) * width_; ++i)
      theta_[wx_off() + i] = rng.next_gaussian() * sx;
    for (size_t i = 0; i < size_t(hidden_) * hidden_; ++i)
      theta_[wh_off() + i] = rng.next_gaussian() * sh;
    for (int i = 0; i < hidden_; ++i)
      theta_[wo_off() + size_t(i)] = rng.next_gaussian() * sh;
  }

  // Runs the recurrence over the trailing `length` rows. Padding rows are
  // never touched, which is what makes predictions invariant to re-padding.
  // When `cache` is non-null, the per-step hidden states are appended to it.
  void forward(std::span<const double> chi, int length, std::vector<double>& h,
               std::vector<double>& scratch,
               std::vector<double>* cache) const {
    std::fill(h.begin(), h.end(), 0.0);
    int start = max_len_ - length;
    for (int t = start; t < max_len_; ++t) {
      const double* x = chi.data() + size_t(t) * width_;
      for (int k = 0; k < hidden_; ++k) {
        double a = bh()[k];
        const double* wxr = wx() + size_t(k) * width_;
        for (int j = 0; j < width_; ++j) a += wxr[j] * x[j];
        const double* whr = wh() + size_t(k) * hidden_;
        for (int j = 0; j < hidden_; ++j) a += whr[j] * h[size_t(j)];
        scratch[size_t(k)] = std::tanh(a);
      }
      std::swap(h, scratch);
      if (cache) cache->insert(cache->end(), h.begin(), h.end());
    }
  }

  // Loss and gradient for one item; gradient accumulates into grad.
  double backward(const DataItem& item, std::vector<double>& grad) const {
    int m = item.x.length;
    std::vector<double> states;  // h_1..h_m
    states.reserve(size_t(m) * hidden_);
    std::vector<double> h(size_t(hidden_), 0.0), scratch(size_t(hidden_), 0.0);
    forward(item.x.chi, m, h, scratch, &states);

    auto h_at = [&](int t) {  // t in [0, m); t == -1 is the zero state
      return t < 0 ? nullptr : states.data() + size_t(t) * hidden_;
    };
    const double* hm = m > 0 ? h_at(m - 1) : nullptr;
    double out = bo();
    if (hm)
      for (int k = 0; k < hidden_; ++k) out += wo()[k] * hm[k];

    double target = task_ == TaskKind::regression
                        ? (item.y - y_mean_) / y_std_
                        : item.y;
    double loss, dout;
    if (task_ == TaskKind::regression) {
      double e = out - target;
      loss = 0.5 * e * e;
      dout = e;
    } else {
      double p = std::clamp(detail::sigmoid(out), 1e-12, 1.0 - 1e-12);
      loss = target >= 0.5 ? -std::log(p) : -std::log(1.0 - p);
      dout = p - target;
    }

    grad[bo_off()] += dout;
    if (hm)
      for (int k = 0; k < hidden_; ++k) grad[wo_off() + size_t(k)] += dout * hm[k];

    std::vector<double> dh(size_t(hidden_), 0.0), da(size_t(hidden_), 0.0);
    if (hm)
      for (int k = 0; k < hidden_; ++k) dh[size_t(k)] = dout * wo()[k];
    int start = max_len_ - m;
    for (int t = m - 1; t >= 0; --t) {
      const double* ht = h_at(t);
      const double* hprev = h_at(t - 1);
      const double* x = item.x.chi.data() + size_t(start + t) * width_;
      for (int k = 0; k < hidden_; ++k)
        da[size_t(k)] = dh[size_t(k)] * (1.0 - ht[k] * ht[k]);
      for (int k = 0; k < hidden_; ++k) {
        double d = da[size_t(k)];
        if (d == 0.0) continue;
        double* gx = grad.data() + wx_off() + size_t(k) * width_;
        for (int j = 0; j < width_; ++j) gx[j] += d * x[j];
        if (hprev) {
          double* gh = grad.data() + wh_off() + size_t(k) * hidden_;
          for (int j = 0; j < hidden_; ++j) gh[j] += d * hprev[j];
        }
        grad[bh_off() + size_t(k)] += d;
      }
      std::fill(dh.begin(), dh.end(), 0.0);
      if (t > 0)
        for (int k = 0; k < hidden_; ++k) {
          double d = da[size_t(k)];
          const double* whr = wh() + size_t(k) * hidden_;
          for (int j = 0; j < hidden_; ++j) dh[size_t(j)] += d * whr[j];
        }
    }
    return loss;
  }

  double mean_loss(const std::vector<const DataItem*>& items) const {
    if (items.empty()) return 0.0;
    std::vector<double> h(size_t(hidden_), 0.0), scratch(size_t(hidden_), 0.0);
    double total = 0.0;
    for (const auto* item : items) {
      forward(item->x.chi, item->x.length, h, scratch, nullptr);
      double out = bo();
      for (int k = 0; k < hidden_; ++k) out += wo()[k] * h[size_t(k)];
      if (task_ == TaskKind::regression) {
        double e = out - (item->y - y_mean_) / y_std_;
        total += 0.5 * e * e;
      } else {
        double p = std::clamp(detail::sigmoid(out), 1e-12, 1.0 - 1e-12);
        total += item->y >= 0.5 ? -std::log(p) : -std::log(1.0 - p);
      }
    }
    return total / double(items.size());
  }

  void train_adam(const std::vector<const DataItem*>& train,
                  const std::vector<const DataItem*>& validation,
                  uint64_t seed) {
    std::vector<double> grad(theta_.size()), m1(theta_.size(), 0.0),
        m2(theta_.size(), 0.0);
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> best_theta = theta_;
    double best_val = validation.empty() ? 0.0 : mean_loss(validation);
    int waited = 0;
    int64_t step = 0;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    for (int epoch = 0; epoch < hyper_.epochs; ++epoch) {
      Rng rng(Rng::mix(seed, 0xE09 + uint64_t(epoch)));
      rng.shuffle(order);
      for (size_t pos = 0; pos < order.size(); pos += size_t(hyper_.batch_size)) {
        size_t end = std::min(order.size(), pos + size_t(hyper_.batch_size));
        std::fill(grad.begin(), grad.end(), 0.0);
        for (size_t i = pos; i < end; ++i) backward(*train[order[i]], grad);
        double inv = 1.0 / double(end - pos);
        double norm2 = 0.0;
        for (double& g : grad) {
          g *= inv;
          norm2 += g * g;
        }
        double norm = std::sqrt(norm2);
        if (norm > hyper_.clip_norm)
          for (double& g : grad) g *= hyper_.clip_norm / norm;

        ++step;
        double corr1 = 1.0 - std::pow(b1, double(step));
        double corr2 = 1.0 - std::pow(b2, double(step));
        for (size_t i = 0; i < theta_.size(); ++i) {
          m1[i] = b1 * m1[i] + (1 - b1) * grad[i];
          m2[i] = b2 * m2[i] + (1 - b2) * grad[i] * grad[i];
          theta_[i] -= hyper_.learning_rate * (m1[i] / corr1) /
                       (std::sqrt(m2[i] / corr2) + eps);
        }
      }
      if (!validation.empty()) {
        double v = mean_loss(validation);
        if (v < best_val - 1e-9) {
          best_val = v;
          best_theta = theta_;
          waited = 0;
        } else if (++waited > hyper_.patience) {
          break;
        }
      }
    }
    if (!validation.empty()) theta_ = best_theta;
  }

  TaskKind task_;
  RecurrentHyper hyper_;
  int hidden_ = 0;
  double y_mean_ = 0.0, y_std_ = 1.0;
  std::vector<double> theta_;
};

// ---------------------------------------------------------------------------
// Factory, evaluation, model file
// ---------------------------------------------------------------------------

struct PredictorConfig {
  std::string kind = "linear";  // mean | linear | recurrent
  LinearHyper linear;
  RecurrentHyper recurrent;
};

inline std::unique_ptr<Predictor> make_predictor(const PredictorConfig& cfg,
                                                 TaskKind task) {
  if (cfg.kind == "mean") return std::make_unique<MeanPredictor>(task);
  if (cfg.kind == "linear")
    return std::make_unique<LinearPredictor>(task, cfg.linear);
  if (cfg.kind == "recurrent")
    return std::make_unique<RecurrentPredictor>(task, cfg.recurrent);
  throw ValidationError("predictor: unknown kind '" + cfg.kind +
                        "' (expected mean, linear or recurrent)");
}

inline EvaluationReport evaluate(const Predictor& model,
                                 const std::vector<const DataItem*>& test) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  std::vector<double> y, y_hat;
  y.reserve(test.size());
  y_hat.reserve(test.size());
  for (const auto* item : test) {
    y.push_back(item->y);
    y_hat.push_back(model.predict(item->x));
  }
  return evaluate_predictions(model.task(), y, y_hat);
}

inline constexpr char kModelMagic[8] = {'P', 'M', 'X', 'M', 'D', 'L', '0', '1'};

inline void save_schema(std::ostream& os, const FeatureSchema& schema) {
  write_u64(os, schema.features.size());
  for (const auto& f : schema.features) {
    write_str(os, f.attribute);
    write_str(os, f.value);
    write_u8(os, uint8_t(f.kind));
    write_u8(os, f.derived ? 1 : 0);
    write_u8(os, f.scaled ? 1 : 0);
    write_f64(os, f.scale_min);
    write_f64(os, f.scale_max);
    write_f64(os, f.median);
  }
  write_u64(os, schema.onehot_groups.size());
  for (auto [b, e] : schema.onehot_groups) {
    write_u32(os, uint32_t(b));
    write_u32(os, uint32_t(e));
  }
}

inline FeatureSchema load_schema(std::istream& is) {
  FeatureSchema schema;
  schema.features.resize(size_t(read_u64(is)));
  for (auto& f : schema.features) {
    f.attribute = read_str(is);
    f.value = read_str(is);
    f.kind = FeatureKind(read_u8(is));
    f.derived = read_u8(is) != 0;
    f.scaled = read_u8(is) != 0;
    f.scale_min = read_f64(is);
    f.scale_max = read_f64(is);
    f.median = read_f64(is);
  }
  schema.onehot_groups.resize(size_t(read_u64(is)));
  for (auto& [b, e] : schema.onehot_groups) {
    b = int(read_u32(is));
    e = int(read_u32(is));
  }
  return schema;
}

// The model file is self-contained: schema, KPI definition, task and the
// predictor parameters, so explain-online needs nothing but the model and
// the running cases.
inline void save_model(const std::string& path, const Predictor& model,
                       const FeatureSchema& schema, const KpiLabeler& kpi) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeError("cannot write model file: " + path);
  os.write(kModelMagic, sizeof kModelMagic);
  write_u32(os, 1);
  write_u8(os, uint8_t(model.task()));
  write_str(os, model.kind());
  write_u8(os, uint8_t(kpi.kind));
  write_str(os, kpi.target);
  write_u64(os, model.schema_fingerprint());
  write_u32(os, uint32_t(model.max_len()));
  write_u32(os, uint32_t(model.width()));
  save_schema(os, schema);
  model.save_params(os);
  if (!os) throw RuntimeError("short write on model file: " + path);
}

struct LoadedModel {
  std::unique_ptr<Predictor> predictor;
  FeatureSchema schema;
  KpiLabeler kpi;
  int max_len = 0;
};

inline LoadedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot open model file: " + path);
  char magic[8];
  read_raw(is, magic, sizeof magic, "magic");
  if (std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    throw RuntimeError("not a model file: " + path);
  uint32_t version = read_u32(is);
  if (version != 1)
    throw RuntimeError("unsupported model version " + std::to_string(version));
  LoadedModel out;
  TaskKind task = TaskKind(read_u8(is));
  std::string kind = read_str(is);
  out.kpi.kind = KpiKind(read_u8(is));
  out.kpi.target = read_str(is);
  uint64_t fp = read_u64(is);
  int max_len = int(read_u32(is));
  int width = int(read_u32(is));
  out.schema = load_schema(is);
  PredictorConfig cfg;
  cfg.kind = kind;
  out.predictor = make_predictor(cfg, task);
  out.predictor->bind_schema(fp, max_len, width);
  out.predictor->load_params(is);
  out.max_len = max_len;
  if (out.schema.fingerprint() != fp)
    throw RuntimeError("model file is inconsistent: schema fingerprint " +
                       hex64(out.schema.fingerprint()) + " vs header " +
                       hex64(fp));
  return out;
}

}  // namespace pmxplain
