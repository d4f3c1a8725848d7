#include "aogtrack/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace aog {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& opts,
                           const Projection& project) {
    const std::size_t n = x0.size();
    LbfgsResult r;
    if (project) project(x0);
    std::vector<double> g(n), gn(n), xn(n), d(n);
    double fx = f(x0, g);
    r.x = std::move(x0);

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> history;

    for (int it = 0; it < opts.max_iterations; ++it) {
        const double gnorm = std::sqrt(dot(g, g));
        if (gnorm <= opts.tolerance * std::max(1.0, std::sqrt(dot(r.x, r.x)))) {
            r.converged = true;
            break;
        }

        // Two-loop recursion.
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        std::vector<double> alpha(history.size());
        for (std::size_t k = history.size(); k-- > 0;) {
            alpha[k] = history[k].rho * dot(history[k].s, d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * history[k].y[i];
        }
        if (!history.empty()) {
            const auto& h = history.back();
            const double gamma = dot(h.s, h.y) / dot(h.y, h.y);
            for (auto& v : d) v *= gamma;
        } else {
            for (auto& v : d) v /= std::max(gnorm, 1.0);
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            const double beta = history[k].rho * dot(history[k].y, d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * history[k].s[i];
        }
        if (dot(d, g) >= 0.0) {  // not a descent direction: restart
            history.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        }

        double step = 1.0;
        bool accepted = false;
        double fn = fx;
        for (int ls = 0; ls < opts.max_line_search; ++ls, step *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = r.x[i] + step * d[i];
            if (project) project(xn);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xn[i] - r.x[i]);
            fn = f(xn, gn);
            if (fn < fx && fn <= fx + 1e-4 * decrease) {
                accepted = true;
                break;
            }
        }
        r.iterations = it + 1;
        if (!accepted) break;

        Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            p.s[i] = xn[i] - r.x[i];
            p.y[i] = gn[i] - g[i];
        }
        const double sy = dot(p.s, p.y);
        if (sy > 1e-12 * std::max(1.0, dot(p.y, p.y))) {
            p.rho = 1.0 / sy;
            history.push_back(std::move(p));
            if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
        }
        r.x.swap(xn);
        g.swap(gn);
        const double drop = fx - fn;
        fx = fn;
        if (drop <= opts.progress_tolerance * std::max(1.0, std::abs(fx))) {
            r.converged = true;
            break;
        }
    }
    r.value = fx;
    return r;
}

}  // namespace aog
