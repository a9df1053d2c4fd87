#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace pisfp::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Direction { Minimize, Maximize };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

// Dense LP: optimize objective.x subject to rows (sense) rhs and
// lower <= x <= upper. Bounds may be infinite.
struct LpProblem {
    Eigen::VectorXd objective;
    Direction direction = Direction::Minimize;
    Eigen::MatrixXd rows;
    std::vector<RowSense> senses;
    Eigen::VectorXd rhs;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    // Creates an n-variable problem with [0, +inf) boxes and no rows.
    static LpProblem with_variables(Eigen::Index n);
    void add_row(const Eigen::VectorXd& coefficients, RowSense sense, double rhs_value);
    Eigen::Index num_variables() const { return objective.size(); }
    Eigen::Index num_rows() const { return rows.rows(); }
};

struct LpSolution {
    Status status = Status::Infeasible;
    Eigen::VectorXd point;
    double value = 0.0;
    int iterations = 0;
    // Row multipliers of the minimization form (objective negated when the
    // problem maximizes). With r = c_min - rows^T y, the dual objective
    // rhs.y + sum_j (r_j > 0 ? r_j lower_j : r_j upper_j) equals value_min.
    Eigen::VectorXd row_duals;
};

// Two-phase dense tableau simplex (Harris ratio test, Bland's rule when
// stalling, periodic refactorization). Deterministic.
// Throws NumericalBreakdown when no admissible pivot exists.
LpSolution solve(const LpProblem& problem);

// Phase one only: any point satisfying the rows and boxes, or nothing.
std::optional<Eigen::VectorXd> feasible_point(const Eigen::MatrixXd& rows,
                                              const std::vector<RowSense>& senses,
                                              const Eigen::VectorXd& rhs,
                                              const Eigen::VectorXd& lower,
                                              const Eigen::VectorXd& upper);

// Largest violation of rows and boxes at x (0 when feasible).
double max_violation(const LpProblem& problem, const Eigen::VectorXd& x);

} // namespace pisfp::lp
