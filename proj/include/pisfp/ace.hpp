#pragma once

#include "pisfp/engine.hpp"
#include "pisfp/model.hpp"

#include <vector>

namespace pisfp {

// Weighted sum over x of E[Y | do(x)], one fractional block per x with a
// nonzero weight. Outcomes are shifted by min(y) so the moment vectors stay
// nonnegative; the shift sits in each block's offset.
struct AceProgram {
    Program program;
    std::vector<double> pi;        // one per x
    std::vector<int> block_x;      // x value of each block in program
    double y_shift = 0.0;
};

AceProgram build_ace_program(const ProblemSpec& spec, const std::vector<double>& pi);
// Uses spec.weights_pi.
AceProgram build_ace_program(const ProblemSpec& spec);

// Block for one x with moments of (y - y_shift).
BlockData ace_block(const ProblemSpec& spec, int x, double y_shift);

BoundResult bound_ace(const ProblemSpec& spec, const std::vector<double>& pi, const RunOptions& options);

} // namespace pisfp
