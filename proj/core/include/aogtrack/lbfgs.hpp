#pragma once

#include <functional>
#include <span>
#include <vector>

namespace aog {

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;
/// Maps x onto the feasible set in place.
using Projection = std::function<void(std::span<double> x)>;

struct LbfgsOptions {
    int max_iterations = 1000;
    double tolerance = 1e-4;     // stop when ||grad|| <= tolerance * max(1, ||x||)
    double progress_tolerance = 0.0;  // stop when the objective drops by less (relative)
    int memory = 20;
    int max_line_search = 30;
};

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS with backtracking line search and optional
/// projection. Every accepted step strictly decreases the objective, so the
/// returned value never exceeds f(project(x0)).
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& opts = {},
                           const Projection& project = {});

}  // namespace aog
