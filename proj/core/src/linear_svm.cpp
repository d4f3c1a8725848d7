#include "aogtrack/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace aog {

double SvmModel::score(std::span<const float> x) const {
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
    return s;
}

double svm_objective(const SvmProblem& p, const SvmModel& m, double C, double normalizer) {
    double reg = m.bias * m.bias;
    for (double v : m.w) reg += v * v;
    double loss = 0.0;
    for (std::size_t i = 0; i < p.x.size(); ++i) loss += std::max(0.0, 1.0 - p.y[i] * m.score(p.x[i]));
    const double n = normalizer > 0.0 ? normalizer : static_cast<double>(p.x.size());
    return 0.5 * reg + C / n * loss;
}

SvmModel train_linear_svm(const SvmProblem& p, const SvmOptions& opts) {
    const std::size_t n = p.x.size();
    if (n == 0 || p.y.size() != n) throw std::invalid_argument("svm: empty or inconsistent training set");
    const std::size_t dim = p.x.front().size();
    for (const auto& xi : p.x)
        if (xi.size() != dim) throw std::invalid_argument("svm: feature vectors differ in length");
    for (int yi : p.y)
        if (yi != 1 && yi != -1) throw std::invalid_argument("svm: labels must be +1 or -1");
    bool identical = true;
    for (std::size_t i = 1; i < n && identical; ++i) identical = p.x[i] == p.x[0];
    if (identical && n > 1 && std::any_of(p.y.begin(), p.y.end(), [&](int v) { return v != p.y[0]; }))
        throw std::invalid_argument("svm: all feature vectors are identical; classes cannot be separated");

    const double upper = opts.C / (opts.normalizer > 0.0 ? opts.normalizer : static_cast<double>(n));
    SvmModel m;
    m.w.assign(dim, 0.0);
    std::vector<double> alpha(n, 0.0), qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double q = 1.0;  // bias feature
        for (float v : p.x[i]) q += double(v) * v;
        qii[i] = q;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opts.seed);
    for (int pass = 0; pass < opts.max_passes; ++pass) {
        std::shuffle(order.begin(), order.end(), rng);
        double max_pg = 0.0;
        for (std::size_t i : order) {
            const double yi = p.y[i];
            const double g = yi * m.score(p.x[i]) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= upper) pg = std::max(g, 0.0);
            max_pg = std::max(max_pg, std::abs(pg));
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qii[i], 0.0, upper);
            const double delta = (alpha[i] - old) * yi;
            if (delta == 0.0) continue;
            for (std::size_t k = 0; k < dim; ++k) m.w[k] += delta * p.x[i][k];
            m.bias += delta;
        }
        m.passes = pass + 1;
        if (max_pg <= opts.tolerance) break;
    }
    m.objective = svm_objective(p, m, opts.C, opts.normalizer);
    return m;
}

}  // namespace aog
