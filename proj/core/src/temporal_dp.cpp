#include "aogtrack/temporal_dp.hpp"

#include <cmath>
#include <limits>

namespace aog {

DpResult temporal_dp(const DpTable& table, const TransitionCost& cost) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(table.unary.size());
    DpResult r;
    r.choice.assign(static_cast<std::size_t>(n), -1);

    std::vector<int> frames;
    for (int f = 0; f < n; ++f)
        if (!table.unary[static_cast<std::size_t>(f)].empty()) frames.push_back(f);
    if (frames.empty()) return r;

    std::vector<std::vector<double>> energy(frames.size());
    std::vector<std::vector<int>> back(frames.size());
    energy[0] = table.unary[static_cast<std::size_t>(frames[0])];
    back[0].assign(energy[0].size(), -1);
    for (std::size_t k = 1; k < frames.size(); ++k) {
        const int a = frames[k - 1];
        const int b = frames[k];
        const auto& un = table.unary[static_cast<std::size_t>(b)];
        energy[k].assign(un.size(), inf);
        back[k].assign(un.size(), -1);
        for (std::size_t j = 0; j < un.size(); ++j) {
            for (std::size_t i = 0; i < energy[k - 1].size(); ++i) {
                const double prev = energy[k - 1][i];
                if (prev == inf) continue;
                const double e = prev + cost(a, static_cast<int>(i), b, static_cast<int>(j)) + un[j];
                if (e < energy[k][j]) {
                    energy[k][j] = e;
                    back[k][j] = static_cast<int>(i);
                }
            }
        }
    }

    const auto& last = energy.back();
    int best = -1;
    for (std::size_t j = 0; j < last.size(); ++j)
        if (last[j] < inf && (best < 0 || last[j] < last[static_cast<std::size_t>(best)])) best = static_cast<int>(j);

    if (best < 0) {
        r.energy = inf;
        r.low_confidence = true;
        for (int f : frames) {
            const auto& un = table.unary[static_cast<std::size_t>(f)];
            int arg = 0;
            for (std::size_t j = 1; j < un.size(); ++j)
                if (un[j] < un[static_cast<std::size_t>(arg)]) arg = static_cast<int>(j);
            r.choice[static_cast<std::size_t>(f)] = arg;
        }
        return r;
    }

    r.energy = last[static_cast<std::size_t>(best)];
    for (std::size_t k = frames.size(); k-- > 0;) {
        r.choice[static_cast<std::size_t>(frames[k])] = best;
        best = back[k][static_cast<std::size_t>(best)];
    }
    return r;
}

}  // namespace aog
