#include "pisfp/lp.hpp"

#include "pisfp/config.hpp"
#include "pisfp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace pisfp::lp {

const char* to_string(Status s) {
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

LpProblem LpProblem::with_variables(Eigen::Index n) {
    LpProblem p;
    p.objective = Eigen::VectorXd::Zero(n);
    p.rows.resize(0, n);
    p.rhs.resize(0);
    p.lower = Eigen::VectorXd::Zero(n);
    p.upper = Eigen::VectorXd::Constant(n, kInf);
    return p;
}

void LpProblem::add_row(const Eigen::VectorXd& coefficients, RowSense sense, double rhs_value) {
    const Eigen::Index m = rows.rows();
    rows.conservativeResize(m + 1, objective.size());
    rows.row(m) = coefficients.transpose();
    rhs.conservativeResize(m + 1);
    rhs(m) = rhs_value;
    senses.push_back(sense);
}

double max_violation(const LpProblem& problem, const Eigen::VectorXd& x) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < problem.num_rows(); ++i) {
        const double lhs = problem.rows.row(i).dot(x);
        double v = 0.0;
        switch (problem.senses[i]) {
        case RowSense::LessEqual: v = lhs - problem.rhs(i); break;
        case RowSense::GreaterEqual: v = problem.rhs(i) - lhs; break;
        case RowSense::Equal: v = std::abs(lhs - problem.rhs(i)); break;
        }
        worst = std::max(worst, v);
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        worst = std::max(worst, problem.lower(j) - x(j));
        worst = std::max(worst, x(j) - problem.upper(j));
    }
    return worst;
}

namespace {

// x_var = shift_var + sign * column
struct ColumnMap {
    Eigen::Index var;
    double sign;
};

enum class ColumnKind { Structural, Slack, Artificial };

struct StandardForm {
    Eigen::MatrixXd a;          // m x ncols
    Eigen::VectorXd b;          // >= 0
    Eigen::VectorXd cost;       // phase-two costs (min form)
    std::vector<ColumnKind> kind;
    std::vector<int> basis;     // initial identity basis
    std::vector<double> flip;   // orientation of each standard row
    std::vector<Eigen::Index> source_row; // original row or -1 for bound rows
    std::vector<ColumnMap> columns;       // structural columns only
    Eigen::VectorXd shift;
    double objective_shift = 0.0;
    bool box_infeasible = false;
};

StandardForm to_standard_form(const LpProblem& p, bool with_objective) {
    StandardForm sf;
    const Eigen::Index n = p.num_variables();
    sf.shift = Eigen::VectorXd::Zero(n);

    struct BoundRow {
        Eigen::Index column;
        double width;
    };
    std::vector<BoundRow> bound_rows;

    for (Eigen::Index j = 0; j < n; ++j) {
        const double lo = p.lower(j);
        const double hi = p.upper(j);
        if (lo > hi) {
            sf.box_infeasible = true;
        }
        if (std::isfinite(lo)) {
            sf.shift(j) = lo;
            sf.columns.push_back({j, 1.0});
            if (std::isfinite(hi)) {
                bound_rows.push_back({static_cast<Eigen::Index>(sf.columns.size()) - 1, hi - lo});
            }
        } else if (std::isfinite(hi)) {
            sf.shift(j) = hi;
            sf.columns.push_back({j, -1.0});
        } else {
            sf.columns.push_back({j, 1.0});
            sf.columns.push_back({j, -1.0});
        }
    }

    const Eigen::Index n_struct = static_cast<Eigen::Index>(sf.columns.size());
    const Eigen::Index m_orig = p.num_rows();
    const Eigen::Index m = m_orig + static_cast<Eigen::Index>(bound_rows.size());

    // Rows over structural columns, rhs, and sense before orientation.
    Eigen::MatrixXd body = Eigen::MatrixXd::Zero(m, n_struct);
    Eigen::VectorXd rhs(m);
    std::vector<RowSense> sense(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m_orig; ++i) {
        double r = p.rhs(i);
        for (Eigen::Index k = 0; k < n_struct; ++k) {
            const auto& col = sf.columns[static_cast<size_t>(k)];
            body(i, k) = p.rows(i, col.var) * col.sign;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            r -= p.rows(i, j) * sf.shift(j);
        }
        rhs(i) = r;
        sense[static_cast<size_t>(i)] = p.senses[static_cast<size_t>(i)];
        sf.source_row.push_back(i);
    }
    for (size_t k = 0; k < bound_rows.size(); ++k) {
        const Eigen::Index i = m_orig + static_cast<Eigen::Index>(k);
        body(i, bound_rows[k].column) = 1.0;
        rhs(i) = bound_rows[k].width;
        sense[static_cast<size_t>(i)] = RowSense::LessEqual;
        sf.source_row.push_back(-1);
    }

    // Orient rows so rhs >= 0.
    sf.flip.assign(static_cast<size_t>(m), 1.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (rhs(i) < 0.0) {
            body.row(i) *= -1.0;
            rhs(i) = -rhs(i);
            sf.flip[static_cast<size_t>(i)] = -1.0;
            auto& s = sense[static_cast<size_t>(i)];
            if (s == RowSense::LessEqual) {
                s = RowSense::GreaterEqual;
            } else if (s == RowSense::GreaterEqual) {
                s = RowSense::LessEqual;
            }
        }
    }

    Eigen::Index n_slack = 0;
    Eigen::Index n_art = 0;
    for (const auto s : sense) {
        if (s != RowSense::Equal) {
            ++n_slack;
        }
        if (s != RowSense::LessEqual) {
            ++n_art;
        }
    }
    const Eigen::Index ncols = n_struct + n_slack + n_art;
    sf.a = Eigen::MatrixXd::Zero(m, ncols);
    sf.a.leftCols(n_struct) = body;
    sf.b = rhs;
    sf.kind.assign(static_cast<size_t>(n_struct), ColumnKind::Structural);
    sf.kind.resize(static_cast<size_t>(ncols), ColumnKind::Slack);
    sf.basis.assign(static_cast<size_t>(m), -1);

    Eigen::Index next_slack = n_struct;
    Eigen::Index next_art = n_struct + n_slack;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto s = sense[static_cast<size_t>(i)];
        if (s == RowSense::LessEqual) {
            sf.a(i, next_slack) = 1.0;
            sf.basis[static_cast<size_t>(i)] = static_cast<int>(next_slack);
            ++next_slack;
        } else {
            if (s == RowSense::GreaterEqual) {
                sf.a(i, next_slack) = -1.0;
                ++next_slack;
            }
            sf.a(i, next_art) = 1.0;
            sf.kind[static_cast<size_t>(next_art)] = ColumnKind::Artificial;
            sf.basis[static_cast<size_t>(i)] = static_cast<int>(next_art);
            ++next_art;
        }
    }

    sf.cost = Eigen::VectorXd::Zero(ncols);
    if (with_objective) {
        const double dir = p.direction == Direction::Minimize ? 1.0 : -1.0;
        for (Eigen::Index k = 0; k < n_struct; ++k) {
            const auto& col = sf.columns[static_cast<size_t>(k)];
            sf.cost(k) = dir * p.objective(col.var) * col.sign;
        }
        sf.objective_shift = dir * p.objective.dot(sf.shift);
    }
    return sf;
}

class Tableau {
public:
    Tableau(const StandardForm& sf, double relative_pivot)
        : relative_pivot_(relative_pivot), m_(sf.a.rows()), n_(sf.a.cols()), a_(sf.a), b_(sf.b), t_(m_ + 1, n_ + 1), basis_(sf.basis),
          cost_(Eigen::VectorXd::Zero(n_)) {
        t_.topLeftCorner(m_, n_) = sf.a;
        t_.topRightCorner(m_, 1) = sf.b;
        t_.row(m_).setZero();
    }

    Eigen::Index rows() const { return m_; }
    Eigen::Index cols() const { return n_; }
    const std::vector<int>& basis() const { return basis_; }
    double rhs(Eigen::Index i) const { return t_(i, n_); }
    double entry(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }

    // Installs reduced costs for the given column costs.
    void price(const Eigen::VectorXd& cost) {
        cost_ = cost;
        t_.row(m_).head(n_) = cost.transpose();
        t_(m_, n_) = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double cb = cost(basis_[static_cast<size_t>(i)]);
            if (cb != 0.0) {
                t_.row(m_) -= cb * t_.row(i);
            }
        }
    }

    // Rebuilds the body from the original rows and the current basis, which
    // drops the error accumulated by the pivots. False if the basis is singular.
    bool refactor() {
        if (m_ == 0) {
            return true;
        }
        Eigen::MatrixXd bm(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            bm.col(i) = a_.col(basis_[static_cast<size_t>(i)]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(bm);
        lu.setThreshold(tol::kLpPivot);
        if (!lu.isInvertible()) {
            return false;
        }
        t_.topLeftCorner(m_, n_) = lu.solve(a_);
        t_.topRightCorner(m_, 1) = lu.solve(b_);
        price(cost_);
        return true;
    }

    // Objective value of the current basis (min form).
    double objective() const { return -t_(m_, n_); }

    void pivot(Eigen::Index r, Eigen::Index c) {
        const double piv = t_(r, c);
        t_.row(r) /= piv;
        t_(r, c) = 1.0;
        for (Eigen::Index i = 0; i <= m_; ++i) {
            if (i == r) {
                continue;
            }
            const double f = t_(i, c);
            if (f != 0.0) {
                t_.row(i) -= f * t_.row(r);
                t_(i, c) = 0.0;
            }
        }
        basis_[static_cast<size_t>(r)] = static_cast<int>(c);
    }

    enum class Outcome { Optimal, Unbounded };

    // Dual simplex pivots removing small negative basic values left by an
    // ill-conditioned basis. Returns false when a row admits no entering column.
    bool repair(const std::vector<char>& allowed, double tolerance, int& iterations) {
        for (int pass = 0; pass < 4 * static_cast<int>(m_) + 8; ++pass) {
            Eigen::Index r = -1;
            double worst = -tolerance;
            for (Eigen::Index i = 0; i < m_; ++i) {
                if (t_(i, n_) < worst) {
                    worst = t_(i, n_);
                    r = i;
                }
            }
            if (r < 0) {
                return true;
            }
            std::vector<char> is_basic(static_cast<size_t>(n_), 0);
            for (const int b : basis_) {
                is_basic[static_cast<size_t>(b)] = 1;
            }
            const double rowmax = t_.row(r).head(n_).cwiseAbs().maxCoeff();
            Eigen::Index enter = -1;
            double best = kInf;
            double best_a = 0.0;
            for (Eigen::Index j = 0; j < n_; ++j) {
                const double a = t_(r, j);
                if (!allowed[static_cast<size_t>(j)] || is_basic[static_cast<size_t>(j)] ||
                    a >= -relative_pivot_ * std::max(1.0, rowmax)) {
                    continue;
                }
                const double ratio = std::max(0.0, t_(m_, j)) / -a;
                if (ratio < best - 1e-12 || (ratio <= best + 1e-12 && -a > best_a)) {
                    best = std::min(best, ratio);
                    best_a = -a;
                    enter = j;
                }
            }
            if (enter < 0) {
                return false;
            }
            pivot(r, enter);
            ++iterations;
            if (!refactor()) {
                return false;
            }
        }
        return false;
    }

    // Lowest-index improving column enters (Bland). The leaving row comes
    // from a two-pass ratio test: the smallest ratio with a small relaxation,
    // then the largest pivot among rows within it. After a run of degenerate
    // pivots it falls back to Bland's leaving rule to rule out cycling.
    Outcome run(const std::vector<char>& allowed, int& iterations, int max_iterations) {
        std::vector<char> is_basic(static_cast<size_t>(n_), 0);
        int since_refactor = 0;
        int degenerate_run = 0;
        for (;;) {
            std::fill(is_basic.begin(), is_basic.end(), 0);
            for (const int b : basis_) {
                is_basic[static_cast<size_t>(b)] = 1;
            }
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (allowed[static_cast<size_t>(j)] && !is_basic[static_cast<size_t>(j)] &&
                    t_(m_, j) < -tol::kLpOptimality) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) {
                if (since_refactor == 0) {
                    return Outcome::Optimal;
                }
                // confirm optimality on a fresh factorization
                if (!refactor()) {
                    throw NumericalBreakdown("LP basis became singular (optimality check)");
                }
                since_refactor = 0;
                continue;
            }
            const double colmax = t_.col(enter).head(m_).cwiseAbs().maxCoeff();
            const double entry_tol = std::max(tol::kLpRatioEntry, relative_pivot_ * colmax);
            Eigen::Index leave = -1;
            bool tiny_only = false;
            if (degenerate_run < kBlandAfter) {
                double bound = kInf;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    const double a = t_(i, enter);
                    if (a > entry_tol) {
                        bound = std::min(bound, (std::max(0.0, t_(i, n_)) + kHarris) / a);
                    } else if (a > tol::kLpPivot) {
                        tiny_only = true;
                    }
                }
                double best_a = 0.0;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    const double a = t_(i, enter);
                    if (a > entry_tol && std::max(0.0, t_(i, n_)) / a <= bound && a > best_a) {
                        best_a = a;
                        leave = i;
                    }
                }
            } else {
                double best = kInf;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    const double a = t_(i, enter);
                    if (a > entry_tol) {
                        const double ratio = std::max(0.0, t_(i, n_)) / a;
                        const double tie = 1e-12 * (1.0 + std::abs(best));
                        if (leave < 0 || ratio < best - tie ||
                            (ratio <= best + tie &&
                             basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leave)])) {
                            if (leave < 0 || ratio < best - tie) {
                                best = ratio;
                            }
                            leave = i;
                        }
                    } else if (a > tol::kLpPivot) {
                        tiny_only = true;
                    }
                }
            }
            if (leave < 0) {
                if (tiny_only) {
                    throw NumericalBreakdown("LP pivot magnitude below tolerance with no alternative");
                }
                return Outcome::Unbounded;
            }
            const double step = std::max(0.0, t_(leave, n_)) / t_(leave, enter);
            degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
            pivot(leave, enter);
            if (++since_refactor >= kRefactorEvery) {
                if (!refactor()) {
                    throw NumericalBreakdown("LP basis became singular");
                }
                since_refactor = 0;
            }
            if (++iterations > max_iterations) {
                throw NumericalBreakdown("LP iteration limit exceeded");
            }
        }
    }

private:
    static constexpr double kHarris = 1e-9;
    static constexpr int kBlandAfter = 50;
    static constexpr int kRefactorEvery = 40;

    double relative_pivot_;

    Eigen::Index m_;
    Eigen::Index n_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd t_;
    std::vector<int> basis_;
    Eigen::VectorXd cost_;
};

constexpr int kMaxIterations = 200000;

// Runs phase one. Returns false when the rows are infeasible.
bool phase_one(const StandardForm& sf, Tableau& tab, int& iterations) {
    const Eigen::Index ncols = sf.a.cols();
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(ncols);
    bool any_art = false;
    for (Eigen::Index j = 0; j < ncols; ++j) {
        if (sf.kind[static_cast<size_t>(j)] == ColumnKind::Artificial) {
            cost(j) = 1.0;
            any_art = true;
        }
    }
    if (!any_art) {
        return true;
    }
    tab.price(cost);
    std::vector<char> allowed(static_cast<size_t>(ncols), 1);
    tab.run(allowed, iterations, kMaxIterations);
    const double scale = 1.0 + (sf.b.size() > 0 ? sf.b.cwiseAbs().maxCoeff() : 0.0);
    if (tab.objective() > tol::kLpPhaseOne * scale) {
        return false;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for (Eigen::Index i = 0; i < tab.rows(); ++i) {
        const int b = tab.basis()[static_cast<size_t>(i)];
        if (sf.kind[static_cast<size_t>(b)] != ColumnKind::Artificial) {
            continue;
        }
        Eigen::Index best = -1;
        double best_abs = tol::kLpCarefulPivot;  // noise-level entries mean the row is redundant
        for (Eigen::Index j = 0; j < ncols; ++j) {
            if (sf.kind[static_cast<size_t>(j)] == ColumnKind::Artificial) {
                continue;
            }
            const double a = std::abs(tab.entry(i, j));
            if (a > best_abs) {
                best_abs = a;
                best = j;
            }
        }
        if (best >= 0) {
            tab.pivot(i, best);
        }
    }
    return true;
}

// Basic values re-solved from the original standard form for accuracy.
Eigen::VectorXd column_values(const StandardForm& sf, const Tableau& tab) {
    const Eigen::Index m = sf.a.rows();
    Eigen::VectorXd values = Eigen::VectorXd::Zero(sf.a.cols());
    if (m == 0) {
        return values;
    }
    Eigen::MatrixXd basis_matrix(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        basis_matrix.col(i) = sf.a.col(tab.basis()[static_cast<size_t>(i)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_matrix);
    Eigen::VectorXd xb;
    if (lu.isInvertible()) {
        xb = lu.solve(sf.b);
    } else {
        xb.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            xb(i) = tab.rhs(i);
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        values(tab.basis()[static_cast<size_t>(i)]) = std::max(0.0, xb(i));
    }
    return values;
}

Eigen::VectorXd to_original(const StandardForm& sf, const Eigen::VectorXd& values, const LpProblem& p) {
    Eigen::VectorXd x = sf.shift;
    for (size_t k = 0; k < sf.columns.size(); ++k) {
        x(sf.columns[k].var) += sf.columns[k].sign * values(static_cast<Eigen::Index>(k));
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        x(j) = std::clamp(x(j), p.lower(j), p.upper(j));
    }
    return x;
}

Eigen::VectorXd row_duals(const StandardForm& sf, const Tableau& tab, Eigen::Index m_orig) {
    const Eigen::Index m = sf.a.rows();
    Eigen::VectorXd y_orig = Eigen::VectorXd::Zero(m_orig);
    if (m == 0) {
        return y_orig;
    }
    Eigen::MatrixXd basis_matrix(m, m);
    Eigen::VectorXd cb(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int b = tab.basis()[static_cast<size_t>(i)];
        basis_matrix.col(i) = sf.a.col(b);
        cb(i) = sf.cost(b);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_matrix.transpose());
    const Eigen::VectorXd y = lu.solve(cb);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index src = sf.source_row[static_cast<size_t>(i)];
        if (src >= 0) {
            y_orig(src) = sf.flip[static_cast<size_t>(i)] * y(i);
        }
    }
    return y_orig;
}

void check_shapes(const LpProblem& p) {
    const Eigen::Index n = p.num_variables();
    if (p.rows.cols() != n && p.rows.rows() > 0) {
        throw ValidationError("LP row width differs from objective length");
    }
    if (p.rhs.size() != p.rows.rows() || static_cast<Eigen::Index>(p.senses.size()) != p.rows.rows()) {
        throw ValidationError("LP rhs/sense count differs from row count");
    }
    if (p.lower.size() != n || p.upper.size() != n) {
        throw ValidationError("LP box size differs from objective length");
    }
    if (!p.objective.allFinite() || !p.rows.allFinite() || !p.rhs.allFinite()) {
        throw ValidationError("LP data must be finite");
    }
}

} // namespace

namespace {

LpSolution solve_with(const LpProblem& problem, double relative_pivot) {
    LpSolution out;
    const StandardForm sf = to_standard_form(problem, true);
    if (sf.box_infeasible) {
        out.status = Status::Infeasible;
        return out;
    }
    Tableau tab(sf, relative_pivot);
    int iterations = 0;
    if (!phase_one(sf, tab, iterations)) {
        out.status = Status::Infeasible;
        out.iterations = iterations;
        return out;
    }
    tab.price(sf.cost);
    std::vector<char> allowed(static_cast<size_t>(sf.a.cols()), 1);
    for (size_t j = 0; j < sf.kind.size(); ++j) {
        if (sf.kind[j] == ColumnKind::Artificial) {
            allowed[j] = 0;
        }
    }
    auto outcome = tab.run(allowed, iterations, kMaxIterations);
    // A slightly infeasible final basis gets dual pivots, then primal again.
    for (int round = 0; round < 3 && outcome == Tableau::Outcome::Optimal; ++round) {
        double low = 0.0;
        for (Eigen::Index i = 0; i < tab.rows(); ++i) {
            low = std::min(low, tab.rhs(i));
        }
        if (low >= -tol::kLpRepair || !tab.repair(allowed, tol::kLpRepair, iterations)) {
            break;
        }
        outcome = tab.run(allowed, iterations, kMaxIterations);
    }
    out.iterations = iterations;
    if (outcome == Tableau::Outcome::Unbounded) {
        out.status = Status::Unbounded;
        return out;
    }
    out.status = Status::Optimal;
    out.point = to_original(sf, column_values(sf, tab), problem);
    out.value = problem.objective.dot(out.point);
    out.row_duals = row_duals(sf, tab, problem.num_rows());

    const double scale = 1.0 + (problem.rhs.size() > 0 ? problem.rhs.cwiseAbs().maxCoeff() : 0.0);
    if (max_violation(problem, out.point) > tol::kLpRowCheck * scale) {
        throw NumericalBreakdown("LP solution violates its constraints beyond tolerance (" +
                                 std::to_string(max_violation(problem, out.point)) + ")");
    }
    return out;
}

// Writes a failing problem where PISFP_LP_DUMP points, for offline replay.
void dump(const LpProblem& p) {
    const char* path = std::getenv("PISFP_LP_DUMP");
    if (path == nullptr) {
        return;
    }
    FILE* f = std::fopen(path, "w");
    if (f == nullptr) {
        return;
    }
    std::fprintf(f, "%ld %ld %d\n", static_cast<long>(p.num_rows()), static_cast<long>(p.num_variables()),
                 p.direction == Direction::Minimize ? 1 : -1);
    for (Eigen::Index j = 0; j < p.num_variables(); ++j) {
        std::fprintf(f, "%.17g %.17g %.17g\n", p.objective(j), p.lower(j), p.upper(j));
    }
    for (Eigen::Index i = 0; i < p.num_rows(); ++i) {
        std::fprintf(f, "%d %.17g", static_cast<int>(p.senses[static_cast<size_t>(i)]), p.rhs(i));
        for (Eigen::Index j = 0; j < p.num_variables(); ++j) {
            std::fprintf(f, " %.17g", p.rows(i, j));
        }
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

} // namespace

namespace {

double power_of_two(double x) { return std::ldexp(1.0, static_cast<int>(std::lround(std::log2(x)))); }

// Equilibrated copy: x = col_scale .* y, rows multiplied by row_scale.
struct Scaled {
    LpProblem problem;
    Eigen::VectorXd col_scale;
    Eigen::VectorXd row_scale;
};

Scaled equilibrate(const LpProblem& p) {
    Scaled s;
    s.problem = p;
    const Eigen::Index n = p.num_variables();
    const Eigen::Index m = p.num_rows();
    s.col_scale = Eigen::VectorXd::Ones(n);
    s.row_scale = Eigen::VectorXd::Ones(m);
    if (m == 0) {
        return s;
    }
    auto& a = s.problem.rows;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double c = a.col(j).cwiseAbs().maxCoeff();
        if (c > 0.0) {
            s.col_scale(j) = power_of_two(1.0 / c);
        }
    }
    a = a * s.col_scale.asDiagonal();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double r = a.row(i).cwiseAbs().maxCoeff();
        if (r > 0.0) {
            s.row_scale(i) = power_of_two(1.0 / r);
        }
    }
    a = s.row_scale.asDiagonal() * a;
    s.problem.rhs = s.row_scale.cwiseProduct(p.rhs);
    s.problem.objective = p.objective.cwiseProduct(s.col_scale);
    s.problem.lower = p.lower.cwiseQuotient(s.col_scale);
    s.problem.upper = p.upper.cwiseQuotient(s.col_scale);
    return s;
}

LpSolution solve_scaled(const LpProblem& problem, double relative_pivot) {
    const Scaled s = equilibrate(problem);
    LpSolution out = solve_with(s.problem, relative_pivot);
    if (out.status != Status::Optimal) {
        return out;
    }
    out.point = out.point.cwiseProduct(s.col_scale);
    for (Eigen::Index j = 0; j < out.point.size(); ++j) {
        out.point(j) = std::clamp(out.point(j), problem.lower(j), problem.upper(j));
    }
    out.value = problem.objective.dot(out.point);
    out.row_duals = out.row_duals.cwiseProduct(s.row_scale);
    const double scale = 1.0 + (problem.rhs.size() > 0 ? problem.rhs.cwiseAbs().maxCoeff() : 0.0);
    if (max_violation(problem, out.point) > tol::kLpRowCheck * scale) {
        throw NumericalBreakdown("LP solution violates its constraints beyond tolerance (" +
                                 std::to_string(max_violation(problem, out.point)) + ")");
    }
    return out;
}

} // namespace

LpSolution solve(const LpProblem& problem) {
    check_shapes(problem);
    // Retries refuse pivots small relative to their column.
    for (const double pivot : {tol::kLpPivot, tol::kLpCarefulPivot, tol::kLpStrictPivot}) {
        try {
            return solve_scaled(problem, pivot);
        } catch (const NumericalBreakdown&) {
        }
    }
    try {
        return solve_with(problem, tol::kLpCarefulPivot);
    } catch (const NumericalBreakdown&) {
        dump(problem);
        throw;
    }
}

std::optional<Eigen::VectorXd> feasible_point(const Eigen::MatrixXd& rows,
                                              const std::vector<RowSense>& senses,
                                              const Eigen::VectorXd& rhs,
                                              const Eigen::VectorXd& lower,
                                              const Eigen::VectorXd& upper) {
    LpProblem p;
    p.objective = Eigen::VectorXd::Zero(lower.size());
    p.rows = rows.rows() > 0 ? rows : Eigen::MatrixXd(0, lower.size());
    p.senses = senses;
    p.rhs = rhs;
    p.lower = lower;
    p.upper = upper;
    check_shapes(p);
    const StandardForm sf = to_standard_form(p, false);
    if (sf.box_infeasible) {
        return std::nullopt;
    }
    Tableau tab(sf, tol::kLpPivot);
    int iterations = 0;
    if (!phase_one(sf, tab, iterations)) {
        return std::nullopt;
    }
    return to_original(sf, column_values(sf, tab), p);
}

} // namespace pisfp::lp
