#include "pisfp/ace.hpp"

#include "pisfp/errors.hpp"

#include <algorithm>
#include <string>

namespace pisfp {

BlockData ace_block(const ProblemSpec& spec, int x, double y_shift) {
    if (!spec.y_values) {
        throw MissingOutcomeValues("ACE needs y_values");
    }
    const auto& ys = *spec.y_values;
    const auto& o = spec.observed;
    BlockData b;
    b.lower = spec.transition_bounds.lower;
    b.upper = spec.transition_bounds.upper;
    b.v_theta = Eigen::VectorXd::Zero(spec.n_w);
    b.v_psi = Eigen::VectorXd::Zero(spec.n_w);
    b.v_omega = Eigen::VectorXd::Zero(spec.n_w);
    for (int w = 0; w < spec.n_w; ++w) {
        for (int y = 0; y < o.n_y; ++y) {
            const double shifted = ys[static_cast<size_t>(y)] - y_shift;
            b.v_theta(w) += shifted * o.at(y, w, x);
            b.v_psi(w) += o.at(y, w, x);
            for (int xx = 0; xx < spec.n_x; ++xx) {
                if (xx != x) {
                    b.v_omega(w) += o.at(y, w, xx);
                }
            }
        }
    }
    b.sum_theta = b.v_theta.sum();
    b.sum_psi = b.v_psi.sum();
    b.sum_omega = b.v_omega.sum();
    b.offset = y_shift + b.sum_theta;
    b.psi_min = spec.psi_min;
    if (b.psi_min * spec.d > b.sum_psi + tol::kIngest) {
        throw ValidationError("psi_min exceeds f(X=" + std::to_string(x) + ")/d");
    }
    return b;
}

AceProgram build_ace_program(const ProblemSpec& spec, const std::vector<double>& pi) {
    if (!spec.y_values) {
        throw MissingOutcomeValues("ACE needs y_values");
    }
    if (static_cast<int>(pi.size()) != spec.n_x) {
        throw ShapeMismatch("weights_pi has " + std::to_string(pi.size()) + " entries for " +
                            std::to_string(spec.n_x) + " treatment values");
    }
    AceProgram ap;
    ap.pi = pi;
    const auto& ys = *spec.y_values;
    ap.y_shift = ys.empty() ? 0.0 : *std::min_element(ys.begin(), ys.end());
    for (int x = 0; x < spec.n_x; ++x) {
        const double w = pi[static_cast<size_t>(x)];
        if (w == 0.0) {
            continue;  // contributes nothing
        }
        WeightedBlock blk;
        blk.data = ace_block(spec, x, ap.y_shift);
        blk.ir = build_ir_block(blk.data);
        blk.weight = w;
        ap.program.blocks.push_back(std::move(blk));
        ap.block_x.push_back(x);
    }
    return ap;
}

AceProgram build_ace_program(const ProblemSpec& spec) {
    if (!spec.weights_pi) {
        throw ValidationError("weights_pi missing");
    }
    return build_ace_program(spec, *spec.weights_pi);
}

BoundResult bound_ace(const ProblemSpec& spec, const std::vector<double>& pi, const RunOptions& options) {
    const AceProgram ap = build_ace_program(spec, pi);
    if (ap.program.blocks.empty()) {
        BoundResult r;
        r.direction = options.direction;
        r.converged = true;
        r.gap_closed = true;
        r.incumbent = 0.0;
        return r;
    }
    return run_program(ap.program, options);
}

} // namespace pisfp
