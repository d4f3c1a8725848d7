#pragma once

#include <functional>
#include <vector>

namespace aog {

/// Viterbi table over a window of frames. unary[f][i] is the energy of
/// candidate i in frame f (typically minus its score); a frame with no
/// candidates is invalid and is bridged by the transition between its valid
/// neighbours.
struct DpTable {
    std::vector<std::vector<double>> unary;
};

/// Cost of moving from candidate i of frame a to candidate j of frame b
/// (a < b, consecutive valid frames). May be +inf.
using TransitionCost = std::function<double(int a, int i, int b, int j)>;

struct DpResult {
    std::vector<int> choice;   // per frame; -1 for invalid frames
    double energy = 0.0;       // +inf if no finite path existed
    bool low_confidence = false;
};

/// Minimum-energy path. When every path has infinite energy, falls back to
/// the per-frame minimum unary and sets low_confidence. Ties prefer the lower
/// candidate index.
DpResult temporal_dp(const DpTable& table, const TransitionCost& cost);

}  // namespace aog
