#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegnet/error.hpp"

namespace eegnet {

// counts[true][predicted]
struct ConfusionMatrix {
  std::size_t classes = 3;
  std::vector<std::size_t> counts;

  ConfusionMatrix() : ConfusionMatrix(3) {}
  explicit ConfusionMatrix(std::size_t n) : classes(n), counts(n * n, 0) {}

  std::size_t& at(std::size_t truth, std::size_t pred) { return counts[truth * classes + pred]; }
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> preds, std::size_t classes = 3) {
  if (labels.size() != preds.size())
    throw ConfigError("confusion: " + std::to_string(labels.size()) + " labels vs " + std::to_string(preds.size()) +
                      " predictions");
  if (labels.empty()) throw ConfigError("confusion: nothing to evaluate");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || preds[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes ||
        static_cast<std::size_t>(preds[i]) >= classes)
      throw ConfigError("confusion: class index out of range at position " + std::to_string(i));
    ++cm.at(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(preds[i]));
  }
  return cm;
}

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  ConfusionMatrix matrix;
  std::vector<ClassScores> per_class;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

// Ratios with a zero denominator are defined as 0.
inline std::vector<ClassScores> class_scores(const ConfusionMatrix& cm) {
  std::vector<ClassScores> out(cm.classes);
  for (std::size_t c = 0; c < cm.classes; ++c) {
    std::size_t tp = cm.at(c, c), predicted = 0, actual = 0;
    for (std::size_t k = 0; k < cm.classes; ++k) {
      predicted += cm.at(k, c);
      actual += cm.at(c, k);
    }
    auto& s = out[c];
    s.support = actual;
    s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  return out;
}

/// Per-class F1 averaged with weights equal to true-class support.
inline double weighted_f1(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw ConfigError("weighted_f1: empty confusion matrix");
  double acc = 0.0;
  for (const auto& s : class_scores(cm)) acc += s.f1 * static_cast<double>(s.support);
  return acc / static_cast<double>(n);
}

inline EvalReport evaluate_predictions(std::span<const int> labels, std::span<const int> preds,
                                       std::size_t classes = 3) {
  EvalReport r;
  r.matrix = confusion(labels, preds, classes);
  r.per_class = class_scores(r.matrix);
  r.weighted_f1 = weighted_f1(r.matrix);
  std::size_t diag = 0;
  double macro = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    diag += r.matrix.at(c, c);
    macro += r.per_class[c].f1;
  }
  r.macro_f1 = macro / static_cast<double>(classes);
  r.accuracy = static_cast<double>(diag) / static_cast<double>(r.matrix.total());
  return r;
}

inline double round4(double v) { return std::round(v * 1e4) / 1e4; }

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < r.matrix.classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.matrix.classes; ++p) row.push_back(r.matrix.at(t, p));
    rows.push_back(row);
  }
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_class)
    per.push_back({{"precision", round4(s.precision)},
                   {"recall", round4(s.recall)},
                   {"f1", round4(s.f1)},
                   {"support", s.support}});
  return {{"confusion", rows},
          {"per_class", per},
          {"weighted_f1", round4(r.weighted_f1)},
          {"macro_f1", round4(r.macro_f1)},
          {"accuracy", round4(r.accuracy)}};
}

}  // namespace eegnet
