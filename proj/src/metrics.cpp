#include "qacgen/metrics.hpp"

#include <cmath>
#include <numeric>

#include "qacgen/errors.hpp"

namespace qacgen {

F1Scores micro_macro_f1(std::span<const std::string> gold, std::span<const std::string> pred,
                        std::span<const std::string> classes) {
  if (gold.size() != pred.size()) {
    throw PreconditionError("gold has " + std::to_string(gold.size()) + " labels, pred has " +
                            std::to_string(pred.size()));
  }
  if (gold.empty()) throw PreconditionError("cannot score an empty prediction set");
  if (classes.empty()) throw PreconditionError("no classes to score");

  F1Scores out;
  std::uint64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  double macro_sum = 0.0;
  for (const auto& c : classes) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] == c;
      const bool p = pred[i] == c;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    out.per_class[c] = f1;
    macro_sum += f1;
  }
  const auto denom = 2 * tp_sum + fp_sum + fn_sum;
  out.micro = denom ? 2.0 * static_cast<double>(tp_sum) / static_cast<double>(denom) : 0.0;
  out.macro = macro_sum / static_cast<double>(classes.size());
  return out;
}

double accuracy(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.size() != pred.size() || gold.empty()) throw PreconditionError("accuracy: bad lengths");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hit += gold[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return r;
}

std::uint64_t update_steps(std::uint64_t set_size, std::uint64_t epochs, std::uint64_t batch_size) {
  if (batch_size < 1) throw PreconditionError("update_steps: batch size must be >= 1");
  return epochs * ((set_size + batch_size - 1) / batch_size);
}

ParityResult parity_epochs(std::uint64_t reference_set_size, std::uint64_t reference_epochs,
                           std::uint64_t baseline_set_size, std::uint64_t batch_size) {
  if (reference_set_size < 1 || reference_epochs < 1 || baseline_set_size < 1 || batch_size < 1) {
    throw PreconditionError("parity_epochs: all counts must be >= 1");
  }
  ParityResult r;
  r.reference_steps = update_steps(reference_set_size, reference_epochs, batch_size);
  const auto per_epoch = update_steps(baseline_set_size, 1, batch_size);
  r.epochs = (r.reference_steps + per_epoch - 1) / per_epoch;
  r.baseline_steps = r.epochs * per_epoch;
  return r;
}

}  // namespace qacgen
