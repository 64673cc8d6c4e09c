// Evaluation metrics built from scratch: MAE, F1 at a fixed threshold,
// AUROC via the rank statistic with tie averaging, and average precision
// computed by step integration of the PR curve with precision made monotone
// from the right.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmxplain/common.hpp"

namespace pmxplain {

inline double mean_absolute_error(std::span<const double> y,
                                  std::span<const double> y_hat) {
  if (y.size() != y_hat.size() || y.empty())
    throw ValidationError("mean_absolute_error: need equal non-empty vectors");
  double sum = 0.0;
  for (size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - y_hat[i]);
  return sum / double(y.size());
}

struct ConfusionCounts {
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline ConfusionCounts confusion_at(std::span<const double> labels,
                                    std::span<const double> scores,
                                    double threshold = 0.5) {
  ConfusionCounts c;
  for (size_t i = 0; i < labels.size(); ++i) {
    bool truth = labels[i] >= 0.5;
    bool pred = scores[i] >= threshold;
    if (truth && pred) ++c.tp;
    else if (!truth && pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

// F1 = 2 TP / (2 TP + FP + FN); 0 when the denominator vanishes.
inline double f1_score(std::span<const double> labels,
                       std::span<const double> scores,
                       double threshold = 0.5) {
  ConfusionCounts c = confusion_at(labels, scores, threshold);
  uint64_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * double(c.tp) / double(denom);
}

// AUROC as the Mann-Whitney rank statistic; ties get average ranks. Returns
// nothing when only one class is present.
inline std::optional<double> auroc(std::span<const double> labels,
                                   std::span<const double> scores) {
  size_t n = labels.size();
  uint64_t n_pos = 0;
  for (size_t i = 0; i < n; ++i)
    if (labels[i] >= 0.5) ++n_pos;
  uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] >= 0.5) rank_sum_pos += avg_rank;
    i = j;
  }
  return (rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1)) /
         (double(n_pos) * double(n_neg));
}

// Area under the precision-recall curve: (recall, precision) points at each
// distinct threshold, precision replaced by its running maximum scanning
// from the highest recall leftwards, then summed as recall-step rectangles.
inline std::optional<double> average_precision(std::span<const double> labels,
                                               std::span<const double> scores) {
  size_t n = labels.size();
  uint64_t n_pos = 0;
  for (size_t i = 0; i < n; ++i)
    if (labels[i] >= 0.5) ++n_pos;
  if (n_pos == 0 || n_pos == n) return std::nullopt;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  std::vector<double> recall, precision;
  uint64_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] >= 0.5) ++tp;
      else ++fp;
    }
    recall.push_back(double(tp) / double(n_pos));
    precision.push_back(double(tp) / double(tp + fp));
    i = j;
  }
  for (size_t k = precision.size(); k-- > 1;)
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double area = 0.0, prev_recall = 0.0;
  for (size_t k = 0; k < recall.size(); ++k) {
    area += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return area;
}

enum class TaskKind : uint8_t { regression, binary };

struct EvaluationReport {
  TaskKind task = TaskKind::regression;
  uint64_t n = 0;
  double positive_rate = 0.0;           // binary only
  std::optional<double> mae;            // regression
  std::optional<double> f1, auroc, apr; // binary

  std::string to_text() const {
    std::string out;
    out += "task=" + std::string(task == TaskKind::regression ? "regression"
                                                              : "binary") + "\n";
    out += "n=" + std::to_string(n) + "\n";
    if (task == TaskKind::binary)
      out += "positive_rate=" + format_g(positive_rate) + "\n";
    auto line = [&](const char* k, const std::optional<double>& v) {
      out += std::string(k) + "=" + (v ? format_g(*v) : "absent") + "\n";
    };
    if (task == TaskKind::regression) line("mae", mae);
    if (task == TaskKind::binary) {
      line("f1", f1);
      line("auroc", auroc);
      line("apr", apr);
    }
    return out;
  }
};

inline EvaluationReport evaluate_predictions(TaskKind task,
                                             std::span<const double> y,
                                             std::span<const double> y_hat) {
  if (y.empty()) throw ValidationError("evaluate: empty test set");
  EvaluationReport r;
  r.task = task;
  r.n = y.size();
  if (task == TaskKind::regression) {
    r.mae = mean_absolute_error(y, y_hat);
  } else {
    uint64_t pos = 0;
    for (double v : y)
      if (v >= 0.5) ++pos;
    r.positive_rate = double(pos) / double(y.size());
    r.f1 = f1_score(y, y_hat);
    r.auroc = auroc(y, y_hat);
    r.apr = average_precision(y, y_hat);
  }
  return r;
}

}  // namespace pmxplain
