#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qacgen {

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
  std::map<std::string, double> per_class;
};

// Micro-F1 from TP/FP/FN summed over `classes`; macro-F1 is the unweighted
// mean of per-class F1, where precision, recall and F1 are 0 whenever their
// denominator is 0. Throws PreconditionError on length mismatch or empty input.
F1Scores micro_macro_f1(std::span<const std::string> gold, std::span<const std::string> pred,
                        std::span<const std::string> classes);

double accuracy(std::span<const std::string> gold, std::span<const std::string> pred);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
};
MeanStd mean_std(std::span<const double> values);

// Optimizer steps for N examples over E epochs at batch size B: E * ceil(N / B).
std::uint64_t update_steps(std::uint64_t set_size, std::uint64_t epochs, std::uint64_t batch_size);

struct ParityResult {
  std::uint64_t epochs = 0;
  std::uint64_t reference_steps = 0;
  std::uint64_t baseline_steps = 0;
};

// Smallest epoch count whose step total on the baseline set meets or exceeds
// the reference run's. All arguments must be >= 1.
ParityResult parity_epochs(std::uint64_t reference_set_size, std::uint64_t reference_epochs,
                           std::uint64_t baseline_set_size, std::uint64_t batch_size);

}  // namespace qacgen
