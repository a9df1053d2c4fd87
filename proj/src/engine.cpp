#include "pisfp/engine.hpp"

#include "pisfp/errors.hpp"
#include "pisfp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <thread>
#include <unordered_map>

namespace pisfp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A row whose vertex values spread by less than this is treated as constant.
constexpr double kFlatRow = 1e-13;

} // namespace

const char* to_string(BoundDirection d) { return d == BoundDirection::Lower ? "lower" : "upper"; }

Eigen::Index Program::dimension() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks) {
        n += 4 * b.data.d();
    }
    return n;
}

Eigen::Index Program::block_offset(size_t b) const {
    Eigen::Index n = 0;
    for (size_t k = 0; k < b; ++k) {
        n += 4 * blocks[k].data.d();
    }
    return n;
}

double Program::value(const std::vector<PhiVector>& phis) const {
    double v = 0.0;
    for (size_t b = 0; b < blocks.size(); ++b) {
        v += blocks[b].weight * blocks[b].data.objective(phis[b]);
    }
    return v;
}

Program event_program(const ProblemSpec& spec) {
    Program p;
    WeightedBlock b;
    b.data = event_block(spec);
    b.ir = build_ir_block(b.data);
    b.weight = 1.0;
    p.blocks.push_back(std::move(b));
    return p;
}

// ---- bounding ----

namespace {

// Affine constraints g(gamma) <= 0 (or == 0) given by their values at the
// simplex vertices. In local coordinates mu (lambda_0 = 1 - sum mu) the row
// reads sum_j mu_j (g_j - g_0) <= -g_0.
class CellRows {
public:
    explicit CellRows(Eigen::Index n) : n_(n) {}

    void less_equal(const Eigen::VectorXd& g) {
        if (infeasible_) {
            return;
        }
        const double hi = g.maxCoeff();
        const double lo = g.minCoeff();
        if (hi <= 0.0) {
            return;  // holds on the whole cell
        }
        if (lo > tol::kFeasibility) {
            infeasible_ = true;
            return;
        }
        if (hi - lo <= kFlatRow) {
            return;  // constant within tolerance of feasible
        }
        push(g, lp::RowSense::LessEqual);
    }

    void equal(const Eigen::VectorXd& g) {
        if (infeasible_) {
            return;
        }
        const double hi = g.maxCoeff();
        const double lo = g.minCoeff();
        if (lo > tol::kFeasibility || hi < -tol::kFeasibility) {
            infeasible_ = true;
            return;
        }
        if (hi - lo <= kFlatRow) {
            return;
        }
        push(g, lp::RowSense::Equal);
    }

    bool infeasible() const { return infeasible_; }

    lp::LpProblem problem(const Eigen::VectorXd& objective) const {
        lp::LpProblem p = lp::LpProblem::with_variables(n_);
        p.objective = objective;
        for (size_t k = 0; k < coeffs_.size(); ++k) {
            p.add_row(coeffs_[k], senses_[k], rhs_[k]);
        }
        p.add_row(Eigen::VectorXd::Ones(n_), lp::RowSense::LessEqual, 1.0);
        return p;
    }

private:
    void push(const Eigen::VectorXd& g, lp::RowSense sense) {
        Eigen::VectorXd c = g.tail(n_).array() - g(0);
        const double scale = c.cwiseAbs().maxCoeff();
        coeffs_.push_back(c / scale);
        rhs_.push_back(-g(0) / scale);
        senses_.push_back(sense);
    }

    Eigen::Index n_;
    bool infeasible_ = false;
    std::vector<Eigen::VectorXd> coeffs_;
    std::vector<double> rhs_;
    std::vector<lp::RowSense> senses_;
};

} // namespace

namespace {

// Rows over [mu | auxiliary columns], each scaled to unit max coefficient.
class LpBuilder {
public:
    explicit LpBuilder(Eigen::Index cols) : cols_(cols) {}

    void add(Eigen::VectorXd coef, lp::RowSense sense, double rhs) {
        const double scale = coef.cwiseAbs().maxCoeff();
        if (scale == 0.0) {
            const bool ok = (sense == lp::RowSense::LessEqual && rhs >= -tol::kFeasibility) ||
                            (sense == lp::RowSense::GreaterEqual && rhs <= tol::kFeasibility) ||
                            (sense == lp::RowSense::Equal && std::abs(rhs) <= tol::kFeasibility);
            infeasible_ = infeasible_ || !ok;
            return;
        }
        coefs_.push_back(coef / scale);
        senses_.push_back(sense);
        rhs_.push_back(rhs / scale);
    }

    bool infeasible() const { return infeasible_; }
    Eigen::Index cols() const { return cols_; }

    lp::LpProblem problem(const Eigen::VectorXd& objective, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper) const {
        lp::LpProblem p;
        p.objective = objective;
        p.rows.resize(static_cast<Eigen::Index>(coefs_.size()), cols_);
        p.rhs.resize(static_cast<Eigen::Index>(coefs_.size()));
        for (size_t r = 0; r < coefs_.size(); ++r) {
            p.rows.row(static_cast<Eigen::Index>(r)) = coefs_[r].transpose();
            p.rhs(static_cast<Eigen::Index>(r)) = rhs_[r];
        }
        p.senses = senses_;
        p.lower = lower;
        p.upper = upper;
        return p;
    }

private:
    Eigen::Index cols_;
    bool infeasible_ = false;
    std::vector<Eigen::VectorXd> coefs_;
    std::vector<lp::RowSense> senses_;
    std::vector<double> rhs_;
};

// Cell geometry in local coordinates: gamma = v0 + E mu, mu >= 0, sum mu <= 1.
struct CellMap {
    Eigen::VectorXd v0;
    Eigen::MatrixXd e;

    explicit CellMap(const Simplex& s) : v0(s.vertices.col(0)), e(s.vertices.rightCols(s.dim()).colwise() - v0) {}
};

lp::LpSolution solve_tagged(const lp::LpProblem& p, std::int64_t node) {
    try {
        return lp::solve(p);
    } catch (const NumericalBreakdown& e) {
        throw NumericalBreakdown(std::string(e.what()) + " (node " + std::to_string(node) + ")");
    }
}

struct Range {
    double lo;
    double hi;
};

} // namespace

namespace {

NodeBound bound_cell_impl(const Program& program, const Simplex& s, double sign, double parent_bound, bool strengthen) {
    const Eigen::Index n = s.dim();
    const Eigen::Index nv = n + 1;
    if (n != program.dimension()) {
        throw ShapeMismatch("simplex dimension differs from the program dimension");
    }
    const Eigen::VectorXd center = s.barycenter();
    const size_t nb = program.blocks.size();
    std::vector<Eigen::VectorXd> dc(nb, Eigen::VectorXd::Zero(nv));  // weighted estimator at vertices
    double constant = 0.0;
    CellRows rows(n);

    for (size_t b = 0; b < nb; ++b) {
        const auto& blk = program.blocks[b];
        const int d = blk.data.d();
        const Eigen::Index off = program.block_offset(b);
        const double w = sign * blk.weight;
        const Eigen::VectorXd anchor = center.segment(off, 4 * d);
        constant += w * blk.data.offset;

        // Objective: positive weight under-estimates with C1tan - C2sec,
        // negative weight with C1sec - C2tan. Secants equal F at vertices.
        if (w > 0.0) {
            const auto t1 = tangent({Component::C1}, anchor);
            for (Eigen::Index j = 0; j < nv; ++j) {
                const Eigen::VectorXd g = s.vertices.col(j).segment(off, 4 * d);
                dc[b](j) = w * (t1(g) - eval_c(g).second);
            }
        } else if (w < 0.0) {
            const auto t2 = tangent({Component::C2}, anchor);
            for (Eigen::Index j = 0; j < nv; ++j) {
                const Eigen::VectorXd g = s.vertices.col(j).segment(off, 4 * d);
                dc[b](j) = w * (eval_c(g).first - t2(g));
            }
        }

        // knockoff * psi = 1 relaxed: D1tan - D2sec <= 1, D1sec - D2tan >= 1.
        for (int i = 0; i < d; ++i) {
            const auto t1 = tangent({Component::D1, i}, anchor);
            const auto t2 = tangent({Component::D2, i}, anchor);
            Eigen::VectorXd under(nv);
            Eigen::VectorXd over(nv);
            for (Eigen::Index j = 0; j < nv; ++j) {
                const Eigen::VectorXd g = s.vertices.col(j).segment(off, 4 * d);
                const auto [d1, d2] = eval_d(g, i);
                under(j) = t1(g) - d2 - 1.0;
                over(j) = 1.0 - (d1 - t2(g));
            }
            rows.less_equal(under);
            rows.less_equal(over);
        }

        // knockoff in [1/f(X=x), 1/psi_min].
        for (int i = 0; i < d; ++i) {
            const Eigen::VectorXd k = s.vertices.row(off + i).transpose();
            rows.less_equal(k.array() - 1.0 / blk.data.psi_min);
            rows.less_equal(1.0 / blk.data.sum_psi - k.array());
        }

        // Linearized feasible set on the (theta, psi, omega) part.
        const auto& ir = blk.ir;
        const Eigen::MatrixXd phi_v = s.vertices.block(off + d, 0, 3 * d, nv);
        const Eigen::MatrixXd lhs = ir.rows * phi_v;  // rows x nv
        for (Eigen::Index r = 0; r < ir.num_rows(); ++r) {
            const Eigen::VectorXd g = lhs.row(r).transpose().array() - ir.rhs(r);
            switch (ir.senses[static_cast<size_t>(r)]) {
            case lp::RowSense::LessEqual: rows.less_equal(g); break;
            case lp::RowSense::GreaterEqual: rows.less_equal(-g); break;
            case lp::RowSense::Equal: rows.equal(g); break;
            }
        }
        for (Eigen::Index k = 0; k < 3 * d; ++k) {
            const Eigen::VectorXd x = phi_v.row(k).transpose();
            if (std::isfinite(ir.upper(k))) {
                rows.less_equal(x.array() - ir.upper(k));
            }
            if (std::isfinite(ir.lower(k))) {
                rows.less_equal(ir.lower(k) - x.array());
            }
        }
        if (rows.infeasible()) {
            return {kInf, std::nullopt};
        }
    }

    const CellMap cell(s);
    auto finish = [&](const lp::LpSolution& sol, double value) -> NodeBound {
        if (sol.status != lp::Status::Optimal) {
            return {kInf, std::nullopt};
        }
        const Eigen::VectorXd gamma = cell.v0 + cell.e * sol.point.head(n);
        return {std::max(value, parent_bound), gamma};
    };

    Eigen::VectorXd total = Eigen::VectorXd::Zero(nv);
    for (const auto& v : dc) {
        total += v;
    }
    if (!strengthen) {
        const Eigen::VectorXd c = total.tail(n).array() - total(0);
        const auto sol = solve_tagged(rows.problem(c), s.id);
        return finish(sol, constant + total(0) + sol.value);
    }

    // Coordinate ranges of the relaxed set inside the cell.
    const lp::LpProblem base = rows.problem(Eigen::VectorXd::Zero(n));
    std::vector<Range> range(static_cast<size_t>(n));
    for (size_t b = 0; b < nb; ++b) {
        const auto& blk = program.blocks[b];
        const int d = blk.data.d();
        const Eigen::Index off = program.block_offset(b);
        const double caps_lo[4] = {1.0 / blk.data.sum_psi, 0.0, blk.data.psi_min, 0.0};
        const double caps_hi[4] = {1.0 / blk.data.psi_min, blk.data.sum_theta, blk.data.sum_psi, blk.data.sum_omega};
        for (Eigen::Index k = 0; k < 4 * d; ++k) {
            lp::LpProblem p = base;
            p.objective = cell.e.row(off + k).transpose();
            const auto lo = solve_tagged(p, s.id);
            p.direction = lp::Direction::Maximize;
            const auto hi = solve_tagged(p, s.id);
            if (lo.status != lp::Status::Optimal || hi.status != lp::Status::Optimal) {
                return {kInf, std::nullopt};
            }
            const double x0 = cell.v0(off + k);
            const double slack_lo = 1e-9 * (1.0 + std::abs(x0 + lo.value));
            const double slack_hi = 1e-9 * (1.0 + std::abs(x0 + hi.value));
            const auto part = static_cast<size_t>(k / d);
            range[static_cast<size_t>(off + k)] = {std::max(x0 + lo.value - slack_lo, caps_lo[part]),
                                                   std::min(x0 + hi.value + slack_hi, caps_hi[part])};
        }
        // knockoff = 1/psi on the true set.
        for (int i = 0; i < d; ++i) {
            auto& kr = range[static_cast<size_t>(off + i)];
            auto& pr = range[static_cast<size_t>(off + 2 * d + i)];
            kr.lo = std::max(kr.lo, 1.0 / pr.hi);
            kr.hi = std::min(kr.hi, 1.0 / pr.lo);
            pr.lo = std::max(pr.lo, 1.0 / kr.hi);
            pr.hi = std::min(pr.hi, 1.0 / kr.lo);
        }
    }
    for (const auto& r : range) {
        if (r.lo > r.hi + tol::kFeasibility) {
            return {kInf, std::nullopt};
        }
    }

    // Columns: mu | per block (z_i = theta_i omega_i, v_i = knockoff_i z_i) | t_b.
    std::vector<Eigen::Index> aux(nb);
    Eigen::Index cols = n;
    for (size_t b = 0; b < nb; ++b) {
        aux[b] = cols;
        cols += 2 * program.blocks[b].data.d();
    }
    const Eigen::Index t0 = cols;
    cols += static_cast<Eigen::Index>(nb);

    LpBuilder lpb(cols);
    for (Eigen::Index r = 0; r < base.num_rows(); ++r) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
        c.head(n) = base.rows.row(r).transpose();
        lpb.add(std::move(c), base.senses[static_cast<size_t>(r)], base.rhs(r));
    }
    // sum_k a_k gamma_k + sum aux terms (sense) rhs, in local coordinates.
    auto add_row = [&](std::initializer_list<std::pair<Eigen::Index, double>> gamma_terms,
                       std::initializer_list<std::pair<Eigen::Index, double>> aux_terms, lp::RowSense sense,
                       double rhs) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
        for (const auto& [k, a] : gamma_terms) {
            c.head(n) += a * cell.e.row(k).transpose();
            rhs -= a * cell.v0(k);
        }
        for (const auto& [col, a] : aux_terms) {
            c(col) += a;
        }
        lpb.add(std::move(c), sense, rhs);
    };

    Eigen::VectorXd lower = Eigen::VectorXd::Zero(cols);
    Eigen::VectorXd upper = Eigen::VectorXd::Constant(cols, kInf);
    Eigen::VectorXd objective = Eigen::VectorXd::Zero(cols);
    for (size_t b = 0; b < nb; ++b) {
        const auto& blk = program.blocks[b];
        const int d = blk.data.d();
        const Eigen::Index off = program.block_offset(b);
        const double w = sign * blk.weight;
        for (int i = 0; i < d; ++i) {
            const Eigen::Index kk = off + i;
            const Eigen::Index kt = off + d + i;
            const Eigen::Index kp = off + 2 * d + i;
            const Eigen::Index ko = off + 3 * d + i;
            const Range K = range[static_cast<size_t>(kk)];
            const Range T = range[static_cast<size_t>(kt)];
            const Range P = range[static_cast<size_t>(kp)];
            const Range O = range[static_cast<size_t>(ko)];
            const auto G = lp::RowSense::GreaterEqual;
            const auto L = lp::RowSense::LessEqual;

            // Ranges (not implied by the rows once tightened through 1/psi).
            add_row({{kk, 1.0}}, {}, G, K.lo);
            add_row({{kk, 1.0}}, {}, L, K.hi);
            add_row({{kp, 1.0}}, {}, G, P.lo);
            add_row({{kp, 1.0}}, {}, L, P.hi);
            // knockoff >= 1/psi: tangents; knockoff <= chord over [P.lo, P.hi].
            for (const double p : {P.lo, 0.5 * (P.lo + P.hi), P.hi}) {
                add_row({{kk, 1.0}, {kp, 1.0 / (p * p)}}, {}, G, 2.0 / p);
            }
            add_row({{kk, 1.0}, {kp, 1.0 / (P.lo * P.hi)}}, {}, L, 1.0 / P.lo + 1.0 / P.hi);

            // z = theta * omega.
            const Eigen::Index z = aux[b] + 2 * i;
            const Eigen::Index v = z + 1;
            add_row({{kt, -O.lo}, {ko, -T.lo}}, {{z, 1.0}}, G, -T.lo * O.lo);
            add_row({{kt, -O.hi}, {ko, -T.hi}}, {{z, 1.0}}, G, -T.hi * O.hi);
            add_row({{kt, -O.lo}, {ko, -T.hi}}, {{z, 1.0}}, L, -T.hi * O.lo);
            add_row({{kt, -O.hi}, {ko, -T.lo}}, {{z, 1.0}}, L, -T.lo * O.hi);
            const double z_lo = T.lo * O.lo;
            const double z_hi = T.hi * O.hi;
            lower(z) = z_lo;
            upper(z) = z_hi;
            // v = knockoff * z.
            add_row({{kk, -z_lo}}, {{v, 1.0}, {z, -K.lo}}, G, -K.lo * z_lo);
            add_row({{kk, -z_hi}}, {{v, 1.0}, {z, -K.hi}}, G, -K.hi * z_hi);
            add_row({{kk, -z_lo}}, {{v, 1.0}, {z, -K.hi}}, L, -K.hi * z_lo);
            add_row({{kk, -z_hi}}, {{v, 1.0}, {z, -K.lo}}, L, -K.lo * z_hi);
            lower(v) = K.lo * z_lo;
            upper(v) = K.hi * z_hi;
        }
        // t_b >= w (offset + DC estimator), t_b >= w (offset + sum v).
        const Eigen::Index t = t0 + static_cast<Eigen::Index>(b);
        lower(t) = -kInf;
        objective(t) = 1.0;
        if (w == 0.0) {
            lower(t) = upper(t) = 0.0;
            continue;
        }
        {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
            c.head(n) = -(dc[b].tail(n).array() - dc[b](0)).matrix();
            c(t) = 1.0;
            lpb.add(std::move(c), lp::RowSense::GreaterEqual, w * blk.data.offset + dc[b](0));
        }
        {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
            for (int i = 0; i < d; ++i) {
                c(aux[b] + 2 * i + 1) = -w;
            }
            c(t) = 1.0;
            lpb.add(std::move(c), lp::RowSense::GreaterEqual, w * blk.data.offset);
        }
    }
    if (lpb.infeasible()) {
        return {kInf, std::nullopt};
    }
    const auto sol = solve_tagged(lpb.problem(objective, lower, upper), s.id);
    return finish(sol, sol.value);
}

} // namespace

NodeBound bound_cell(const Program& program, const Simplex& s, double sign, double parent_bound, bool strengthen) {
    if (strengthen) {
        try {
            return bound_cell_impl(program, s, sign, parent_bound, true);
        } catch (const NumericalBreakdown&) {
            // the plain relaxation is weaker but still valid
        }
        NodeBound nb = bound_cell_impl(program, s, sign, parent_bound, false);
        nb.fallback = true;
        return nb;
    }
    return bound_cell_impl(program, s, sign, parent_bound, false);
}

NodeBound bounding(const Simplex& s, const ProblemSpec& spec, BoundDirection direction, bool strengthen) {
    const double sign = direction == BoundDirection::Lower ? 1.0 : -1.0;
    auto nb = bound_cell(event_program(spec), s, sign, -kInf, strengthen);
    nb.bound *= sign;
    return nb;
}

// ---- certificate ----

int longest_nested_chain(const std::vector<SelectedRecord>& history) {
    std::unordered_map<std::int64_t, int> chain;  // nodes in the longest chain ending here
    int best = 0;
    for (const auto& rec : history) {
        int len = 1;
        const auto it = chain.find(rec.parent_id);
        if (it != chain.end()) {
            len = it->second + 1;
        }
        chain[rec.id] = len;
        best = std::max(best, len);
    }
    return std::max(0, best - 1);
}

GlobalError global_error(int L_n, Eigen::Index dimension, double A, double s0_diameter) {
    GlobalError g;
    g.L_n = L_n;
    const int k = L_n / static_cast<int>(dimension);
    g.geometric_factor = std::pow(std::sqrt(3.0) / 2.0, k);
    g.certified_error = A * std::pow(0.75, k) * s0_diameter * s0_diameter;
    return g;
}

GlobalError global_error(const std::vector<SelectedRecord>& history, Eigen::Index dimension, double A,
                         double s0_diameter) {
    return global_error(longest_nested_chain(history), dimension, A, s0_diameter);
}

double compute_A_block(const Eigen::VectorXd& corner, double psi_min) {
    const double d = static_cast<double>(corner.size() / 4);
    const Eigen::VectorXd c = corner.cwiseAbs();
    const double grad = (gradient({Component::C1}, c) - gradient({Component::C2}, c)).norm();
    const double h1 = hessian({Component::C1}, c).norm();
    const double h2 = hessian({Component::C2}, c).norm();
    return 2.0 * (std::sqrt(2.0) + 1.0) * std::sqrt(d) / psi_min * grad + h1 + 0.5 * h2;
}

double compute_A(const Program& program, const Simplex& s0) {
    double a = 0.0;
    const Eigen::VectorXd corner = s0.vertices.cwiseAbs().rowwise().maxCoeff();
    for (size_t b = 0; b < program.blocks.size(); ++b) {
        const auto& blk = program.blocks[b];
        const int d = blk.data.d();
        a += std::abs(blk.weight) *
             compute_A_block(corner.segment(program.block_offset(b), 4 * d), blk.data.psi_min);
    }
    return a;
}

double compute_A(const ProblemSpec& spec, const Simplex& s0) { return compute_A(event_program(spec), s0); }

// ---- local search ----

PhiVector mix_pair(const PhiVector& phi, int i, int j, double alpha) {
    PhiVector out = phi;
    for (Eigen::VectorXd* v : {&out.theta, &out.psi, &out.omega}) {
        const double xi = (*v)(i);
        const double xj = (*v)(j);
        (*v)(i) = alpha * xi + (1.0 - alpha) * xj;
        (*v)(j) = (1.0 - alpha) * xi + alpha * xj;
    }
    return out;
}

namespace {

double block_value(const BlockData& b, const Eigen::VectorXd& x) {
    const Eigen::Index d = x.size() / 3;
    double s = b.offset;
    for (Eigen::Index i = 0; i < d; ++i) {
        s += x(i) * x(2 * d + i) / x(d + i);
    }
    return s;
}

// Range of t keeping x + t*delta inside every row and box that x satisfies
// (rows x already violates may not get worse).
std::pair<double, double> step_range(const LinearConstraintSystem& ir, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& delta) {
    double lo = -kInf;
    double hi = kInf;
    auto clip = [&](double slope, double room) {
        // slope * t <= room
        if (slope > 0.0) {
            hi = std::min(hi, room / slope);
        } else if (slope < 0.0) {
            lo = std::max(lo, room / slope);
        }
    };
    const Eigen::VectorXd ax = ir.rows * x;
    const Eigen::VectorXd ad = ir.rows * delta;
    for (Eigen::Index r = 0; r < ir.num_rows(); ++r) {
        switch (ir.senses[static_cast<size_t>(r)]) {
        case lp::RowSense::LessEqual: clip(ad(r), std::max(0.0, ir.rhs(r) - ax(r))); break;
        case lp::RowSense::GreaterEqual: clip(-ad(r), std::max(0.0, ax(r) - ir.rhs(r))); break;
        case lp::RowSense::Equal:
            if (ad(r) != 0.0) {
                return {0.0, 0.0};
            }
            break;
        }
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        clip(delta(k), std::max(0.0, ir.upper(k) - x(k)));
        clip(-delta(k), std::max(0.0, x(k) - ir.lower(k)));
    }
    return {lo, hi};
}

} // namespace

LocalResult local_search(const BlockData& block, const LinearConstraintSystem& ir, const PhiVector& start,
                         double sign) {
    Eigen::VectorXd x = start.stacked();
    if (x.size() != ir.num_variables() || ir.max_violation(x) > tol::kFeasibility) {
        throw InfeasibleStart("local search start is not feasible");
    }
    const int d = block.d();
    auto f = [&](const Eigen::VectorXd& v) { return sign * block_value(block, v); };
    double cur = f(x);
    LocalResult out;

    constexpr int kSamples = 64;
    constexpr int kRounds = 200;
    for (int round = 0; round < kRounds; ++round) {
        bool improved = false;
        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                // alpha = 1 + t; t in [-1, inf) spans both regimes of the mixing lemma.
                Eigen::VectorXd delta = Eigen::VectorXd::Zero(3 * d);
                for (int blk = 0; blk < 3; ++blk) {
                    delta(blk * d + i) = x(blk * d + i) - x(blk * d + j);
                    delta(blk * d + j) = x(blk * d + j) - x(blk * d + i);
                }
                if (delta.cwiseAbs().maxCoeff() == 0.0) {
                    continue;
                }
                auto [lo, hi] = step_range(ir, x, delta);
                lo = std::max(lo, -1.0);
                hi = std::min(hi, 1e6);
                if (!(hi > lo)) {
                    continue;
                }
                auto g = [&](double t) {
                    const Eigen::VectorXd y = x + t * delta;
                    for (int k = 0; k < d; ++k) {
                        if (y(d + k) <= 0.0) {
                            return kInf;
                        }
                    }
                    return f(y);
                };
                double best_t = 0.0;
                double best = cur;
                for (int k = 0; k <= kSamples; ++k) {
                    const double t = lo + (hi - lo) * k / kSamples;
                    const double v = g(t);
                    if (v < best) {
                        best = v;
                        best_t = t;
                    }
                }
                // Golden-section refinement around the best sample.
                const double h = (hi - lo) / kSamples;
                double a = std::max(lo, best_t - h);
                double b = std::min(hi, best_t + h);
                const double r = 0.5 * (std::sqrt(5.0) - 1.0);
                double c1 = b - r * (b - a);
                double c2 = a + r * (b - a);
                double f1 = g(c1);
                double f2 = g(c2);
                for (int it = 0; it < 60; ++it) {
                    if (f1 < f2) {
                        b = c2;
                        c2 = c1;
                        f2 = f1;
                        c1 = b - r * (b - a);
                        f1 = g(c1);
                    } else {
                        a = c1;
                        c1 = c2;
                        f1 = f2;
                        c2 = a + r * (b - a);
                        f2 = g(c2);
                    }
                }
                for (const double t : {c1, c2}) {
                    const double v = g(t);
                    if (v < best) {
                        best = v;
                        best_t = t;
                    }
                }
                if (best < cur - tol::kLocalImprovement) {
                    x += best_t * delta;
                    cur = f(x);
                    ++out.moves;
                    improved = true;
                }
            }
        }
        if (!improved) {
            break;
        }
    }
    out.phi = PhiVector::from_stacked(x);
    out.value = block_value(block, x);
    return out;
}

LocalResult local_search(const ProblemSpec& spec, const PhiVector& start) {
    const auto block = event_block(spec);
    return local_search(block, build_ir_block(block), start, 1.0);
}

// ---- pruning ----

namespace {

bool prunable(double bound, double incumbent) { return bound > incumbent + tol::kPruneMargin; }

} // namespace

size_t prune(std::vector<BnBNode>& nodes, double incumbent) {
    size_t count = 0;
    for (auto& node : nodes) {
        if (node.status == NodeStatus::Open && prunable(node.bound, incumbent)) {
            node.status = std::isfinite(node.bound) ? NodeStatus::PrunedByIncumbent : NodeStatus::PrunedInfeasible;
            ++count;
        }
    }
    return count;
}

// ---- main loop ----

BoundResult run_program(const Program& program, const RunOptions& options) {
    if (!(options.tol_delta > 0.0)) {
        throw ValidationError("tol_delta must be positive");
    }
    if (options.max_iter < 1) {
        throw ValidationError("max_iter must be at least 1");
    }
    if (program.blocks.empty()) {
        throw ValidationError("program has no blocks");
    }
    const double sign = options.direction == BoundDirection::Lower ? 1.0 : -1.0;
    const Eigen::Index n = program.dimension();

    Eigen::VectorXd gamma_lower(n);
    double alpha = 0.0;
    for (size_t b = 0; b < program.blocks.size(); ++b) {
        const auto& blk = program.blocks[b];
        const auto range = block_range(blk.data, blk.ir);
        gamma_lower.segment(program.block_offset(b), 4 * blk.data.d()) = range.gamma_lower;
        alpha += range.alpha;
    }
    const Simplex s0 = span_simplex(gamma_lower, alpha);

    BoundResult res;
    res.direction = options.direction;
    res.A = compute_A(program, s0);
    res.s0_diameter = s0.diameter;

    std::vector<BnBNode> nodes;
    std::set<std::pair<double, std::int64_t>> open;
    double incumbent = kInf;

    auto consider = [&](const Eigen::VectorXd& gamma) {
        std::vector<PhiVector> phis;
        double value = 0.0;
        for (size_t b = 0; b < program.blocks.size(); ++b) {
            const auto& blk = program.blocks[b];
            const int d = blk.data.d();
            const Eigen::VectorXd x = gamma.segment(program.block_offset(b) + d, 3 * d);
            if (blk.ir.max_violation(x) > tol::kFeasibility) {
                return;
            }
            PhiVector phi = PhiVector::from_stacked(x);
            const double w = sign * blk.weight;
            if (options.local_search && w != 0.0) {
                phi = local_search(blk.data, blk.ir, phi, w > 0.0 ? 1.0 : -1.0).phi;
            }
            value += w * blk.data.objective(phi);
            phis.push_back(std::move(phi));
        }
        if (value < incumbent) {
            incumbent = value;
            res.incumbent_phi = std::move(phis);
        }
    };

    auto add_node = [&](Simplex s, const NodeBound& nb) {
        BnBNode node;
        node.simplex = std::move(s);
        node.bound = nb.bound;
        node.argmin = nb.argmin;
        res.lp_fallbacks += nb.fallback ? 1 : 0;
        if (!std::isfinite(nb.bound)) {
            node.status = NodeStatus::PrunedInfeasible;
        } else {
            open.insert({nb.bound, node.simplex.id});
        }
        nodes.push_back(std::move(node));
    };

    const NodeBound root = bound_cell(program, s0, sign, -kInf, options.strengthen);
    if (!std::isfinite(root.bound)) {
        throw EmptyFeasibleRegion("the initial simplex contains no relaxed feasible point");
    }
    add_node(s0, root);
    consider(*root.argmin);

    auto prune_open = [&]() {
        if (!options.prune) {
            return;
        }
        while (!open.empty()) {
            auto last = std::prev(open.end());
            if (!prunable(last->first, incumbent)) {
                break;
            }
            nodes[static_cast<size_t>(last->second)].status = NodeStatus::PrunedByIncumbent;
            ++res.nodes_pruned;
            open.erase(last);
        }
    };
    prune_open();

    std::vector<SelectedRecord> history;
    double best = -kInf;
    GlobalError err;
    int iter = 0;
    for (;;) {
        // Same stopping point with or without pruning: once no open node can
        // beat the incumbent the remaining tree is settled.
        if (open.empty() || prunable(open.begin()->first, incumbent)) {
            res.gap_closed = true;
            break;
        }
        if (iter >= options.max_iter) {
            break;
        }
        const auto [node_bound, id] = *open.begin();
        open.erase(open.begin());
        ++iter;
        auto& node = nodes[static_cast<size_t>(id)];
        node.status = NodeStatus::Split;
        best = std::max(best, node_bound);
        history.push_back({id, node.simplex.parent_id});
        err = global_error(history, n, res.A, res.s0_diameter);

        TraceRow row;
        row.iter = iter;
        row.selected_node_id = id;
        row.node_bound = sign * node_bound;
        row.best_bound = sign * best;
        row.L_n = err.L_n;
        row.geometric_factor = err.geometric_factor;
        row.certified_error = err.certified_error;

        const double metric = options.compare_scaled_error ? err.certified_error : err.geometric_factor;
        if (metric <= options.tol_delta) {
            res.converged = true;
            row.incumbent = sign * incumbent;
            row.open_nodes = open.size();
            res.trace.push_back(row);
            break;
        }

        const auto next_id = static_cast<std::int64_t>(nodes.size());
        auto [a, b] = bisect(node.simplex, next_id);
        NodeBound na;
        NodeBound nb;
        if (options.threads > 1) {
            auto fa = std::async(std::launch::async, [&] { return bound_cell(program, a, sign, node_bound, options.strengthen); });
            nb = bound_cell(program, b, sign, node_bound, options.strengthen);
            na = fa.get();
        } else {
            na = bound_cell(program, a, sign, node_bound, options.strengthen);
            nb = bound_cell(program, b, sign, node_bound, options.strengthen);
        }
        add_node(std::move(a), na);
        add_node(std::move(b), nb);
        for (const NodeBound* c : {&na, &nb}) {
            if (c->argmin) {
                consider(*c->argmin);
            }
        }
        prune_open();

        row.incumbent = sign * incumbent;
        row.open_nodes = open.size();
        res.trace.push_back(row);
    }

    res.iterations = iter;
    res.bound = sign * best;
    res.L_n = err.L_n;
    res.geometric_factor = err.geometric_factor;
    res.certified_error = err.certified_error;
    if (std::isfinite(incumbent)) {
        res.incumbent = sign * incumbent;
    }
    res.nodes_created = nodes.size();
    return res;
}

BoundResult run(const ProblemSpec& spec, const RunOptions& options) {
    return run_program(event_program(spec), options);
}

// ---- brute force ----

namespace {

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> out;
    if (hi < lo) {
        return out;
    }
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= count; ++k) {
        out.push_back(lo + static_cast<double>(k) * step);
    }
    if (hi - out.back() > 1e-12) {
        out.push_back(hi);
    }
    return out;
}

// Free values x1 of one (theta|psi|omega) part whose rows hold with x2 = sum - x1.
std::vector<double> feasible_part(const BlockData& b, const LinearConstraintSystem& ir, int part,
                                  const std::vector<double>& candidates, double sum) {
    const int d = b.d();
    std::vector<double> out;
    for (const double x1 : candidates) {
        const double vals[2] = {x1, sum - x1};
        bool ok = true;
        for (int k = 0; k < d && ok; ++k) {
            const Eigen::Index col = part * d + k;
            ok = vals[k] >= ir.lower(col) - tol::kFeasibility && vals[k] <= ir.upper(col) + tol::kFeasibility;
        }
        for (Eigen::Index r = 0; r < ir.num_rows() && ok; ++r) {
            const auto row = ir.rows.row(r);
            if (row.segment(part * d, d).cwiseAbs().sum() == 0.0) {
                continue;
            }
            if ((row.head(part * d).cwiseAbs().sum() + row.tail(3 * d - (part + 1) * d).cwiseAbs().sum()) != 0.0) {
                continue;  // rows mixing parts do not occur in this system
            }
            double lhs = 0.0;
            for (int k = 0; k < d; ++k) {
                lhs += row(part * d + k) * vals[k];
            }
            switch (ir.senses[static_cast<size_t>(r)]) {
            case lp::RowSense::LessEqual: ok = lhs <= ir.rhs(r) + tol::kFeasibility; break;
            case lp::RowSense::GreaterEqual: ok = lhs >= ir.rhs(r) - tol::kFeasibility; break;
            case lp::RowSense::Equal: ok = std::abs(lhs - ir.rhs(r)) <= tol::kFeasibility; break;
            }
        }
        if (ok) {
            out.push_back(x1);
        }
    }
    return out;
}

} // namespace

BruteForceResult brute_force_block(const BlockData& block, double grid_step, double sign, int threads) {
    const int d = block.d();
    if (d > 2) {
        throw UnsupportedDimension("brute force supports d <= 2, got d = " + std::to_string(d));
    }
    if (!(grid_step >= 1e-4)) {
        throw ValidationError("grid step must be at least 1e-4");
    }
    const auto ir = build_ir_block(block);
    BruteForceResult res;
    res.value = sign > 0.0 ? kInf : -kInf;

    if (d == 1) {
        Eigen::VectorXd x(3);
        x << block.sum_theta, block.sum_psi, block.sum_omega;
        if (ir.max_violation(x) <= tol::kFeasibility) {
            res.value = block_value(block, x);
            res.argbest = PhiVector::from_stacked(x);
            res.feasible_points = 1;
        }
        return res;
    }

    const auto th = feasible_part(block, ir, 0, grid(0.0, block.sum_theta, grid_step), block.sum_theta);
    const auto ps = feasible_part(block, ir, 1, grid(block.psi_min, block.sum_psi - block.psi_min, grid_step),
                                  block.sum_psi);
    const auto om = feasible_part(block, ir, 2, grid(0.0, block.sum_omega, grid_step), block.sum_omega);
    if (th.empty() || ps.empty() || om.empty()) {
        return res;
    }

    struct Best {
        double v = kInf;
        size_t a = 0, b = 0, c = 0;
    };
    const size_t workers = static_cast<size_t>(std::max(1, threads));
    std::vector<Best> partial(workers);
    auto work = [&](size_t w) {
        Best best;
        for (size_t a = w; a < th.size(); a += workers) {
            const double t1 = th[a];
            const double t2 = block.sum_theta - t1;
            for (size_t b = 0; b < ps.size(); ++b) {
                const double p1 = ps[b];
                const double p2 = block.sum_psi - p1;
                const double k1 = t1 / p1;
                const double k2 = t2 / p2;
                for (size_t c = 0; c < om.size(); ++c) {
                    const double o1 = om[c];
                    const double v = sign * (k1 * o1 + k2 * (block.sum_omega - o1));
                    if (v < best.v) {
                        best = {v, a, b, c};
                    }
                }
            }
        }
        partial[w] = best;
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    Best best;
    for (const auto& p : partial) {
        if (p.v < best.v || (p.v == best.v && std::tie(p.a, p.b, p.c) < std::tie(best.a, best.b, best.c))) {
            best = p;
        }
    }
    res.feasible_points = static_cast<std::uint64_t>(th.size()) * ps.size() * om.size();
    Eigen::VectorXd x(6);
    x << th[best.a], block.sum_theta - th[best.a], ps[best.b], block.sum_psi - ps[best.b], om[best.c],
        block.sum_omega - om[best.c];
    res.argbest = PhiVector::from_stacked(x);
    res.value = block_value(block, x);
    return res;
}

double brute_force_min(const ProblemSpec& spec, double grid_step, int threads) {
    return brute_force_block(event_block(spec), grid_step, 1.0, threads).value;
}

double brute_force_max(const ProblemSpec& spec, double grid_step, int threads) {
    return brute_force_block(event_block(spec), grid_step, -1.0, threads).value;
}

} // namespace pisfp
