#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace aog {

/// Dense training set; labels are +1 / -1. A constant bias feature of 1 is
/// appended internally and regularised like every other weight.
struct SvmProblem {
    std::vector<std::vector<float>> x;
    std::vector<int> y;
};

struct SvmOptions {
    double C = 0.001;           // loss weight is C / normalizer
    double normalizer = 0.0;    // 0 uses the number of training examples
    double tolerance = 1e-6;    // projected-gradient stopping rule
    int max_passes = 2000;
    std::uint64_t seed = 1;
};

struct SvmModel {
    std::vector<double> w;
    double bias = 0.0;
    double objective = 0.0;
    int passes = 0;

    double score(std::span<const float> x) const;
};

/// 1/2 (||w||^2 + b^2) + C/N sum max(0, 1 - y (w.x + b)); N is `normalizer`
/// or the example count when it is 0.
double svm_objective(const SvmProblem& p, const SvmModel& m, double C, double normalizer = 0.0);

/// Dual coordinate descent for the L1-loss linear SVM. Throws
/// std::invalid_argument for empty or degenerate (all-identical) data.
SvmModel train_linear_svm(const SvmProblem& p, const SvmOptions& opts = {});

}  // namespace aog
