#pragma once

#include "pisfp/lp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pisfp {

// p[y][w][x]. In event mode y = 0 is the target event and y = 1 its
// complement; with y_values present, y indexes the outcome support.
struct ObservedDistribution {
    int n_y = 0;
    int n_w = 0;
    int n_x = 0;
    std::vector<double> p;

    double at(int y, int w, int x) const { return p[static_cast<size_t>((y * n_w + w) * n_x + x)]; }
    double& at(int y, int w, int x) { return p[static_cast<size_t>((y * n_w + w) * n_x + x)]; }
};

// n_w x d, rows = w, cols = u.
struct TransitionBounds {
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
};

struct ProblemSpec {
    int d = 0;
    int n_w = 0;
    int n_x = 0;
    int target_x = 0;
    ObservedDistribution observed;
    TransitionBounds transition_bounds;
    double psi_min = 0.0;
    std::optional<std::vector<double>> y_values;
    std::optional<std::vector<double>> weights_pi;

    // Event marginals at x = target_x.
    double f_yx() const;
    double f_x() const;
    double f_not_x() const;
    // Per-w vectors f(y,W,x), f(W,x), f(W,X != x).
    Eigen::VectorXd f_y_w_x() const;
    Eigen::VectorXd f_w_x() const;
    Eigen::VectorXd f_w_not_x() const;
};

struct PhiVector {
    Eigen::VectorXd theta;
    Eigen::VectorXd psi;
    Eigen::VectorXd omega;

    int d() const { return static_cast<int>(theta.size()); }
    // Stacked (theta, psi, omega).
    Eigen::VectorXd stacked() const;
    static PhiVector from_stacked(const Eigen::VectorXd& v);
};

// Data of one fractional program offset + sum_i theta_i omega_i / psi_i over
// its constraint set. Event mode has one block; ACE has one per x.
struct BlockData {
    Eigen::MatrixXd lower;  // n_w x d
    Eigen::MatrixXd upper;
    Eigen::VectorXd v_theta;
    Eigen::VectorXd v_psi;
    Eigen::VectorXd v_omega;
    double sum_theta = 0.0;
    double sum_psi = 0.0;
    double sum_omega = 0.0;
    double offset = 0.0;
    double psi_min = 0.0;

    int d() const { return static_cast<int>(lower.cols()); }
    // offset + sum theta omega / psi. Throws DomainError when psi < psi_min.
    double objective(const PhiVector& phi) const;
};

struct LinearConstraintSystem {
    Eigen::MatrixXd rows;
    std::vector<lp::RowSense> senses;
    Eigen::VectorXd rhs;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<std::string> labels;

    Eigen::Index num_rows() const { return rows.rows(); }
    Eigen::Index num_variables() const { return lower.size(); }
    // Largest violation of rows and boxes at x.
    double max_violation(const Eigen::VectorXd& x) const;
    bool contains(const Eigen::VectorXd& x, double tolerance) const;
    lp::LpProblem as_lp(const Eigen::VectorXd& objective, lp::Direction direction) const;
};

ProblemSpec load_problem(std::istream& source);
ProblemSpec load_problem_file(const std::string& path);
// Checks every invariant; throws ValidationError naming the first failure.
void validate(const ProblemSpec& spec);
std::string problem_to_json(const ProblemSpec& spec);

BlockData event_block(const ProblemSpec& spec);
// Variables ordered (theta, psi, omega).
LinearConstraintSystem build_ir_block(const BlockData& block);
LinearConstraintSystem build_ir_phi(const ProblemSpec& spec);

struct ExactIdentification {
    double value = 0.0;
    PhiVector phi;
};
ExactIdentification identify_exact(const ProblemSpec& spec);

struct Simulation {
    ProblemSpec spec;
    double truth = 0.0;            // f(y | do(target_x))
    std::vector<double> mean_do;   // E[Y | do(x)] per x, with y_values {1, 0}
    double ace_truth = 0.0;        // sum_x pi(x) E[Y | do(x)]
    std::vector<double> joint;     // f(y,u,x), index (y*d + u)*n_x + x
    Eigen::MatrixXd transition;    // true P(W|U)
};
Simulation simulate_forward(std::uint64_t seed, int d, int n_w, int n_x, double widening);

} // namespace pisfp
