#pragma once

#include "pisfp/config.hpp"
#include "pisfp/dc.hpp"
#include "pisfp/geometry.hpp"
#include "pisfp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pisfp {

enum class BoundDirection { Lower, Upper };

const char* to_string(BoundDirection d);

// One fractional program with a weight on its value. The decision vector of
// a program is the concatenation of the blocks' 4d-vectors.
struct WeightedBlock {
    BlockData data;
    LinearConstraintSystem ir;
    double weight = 1.0;
};

struct Program {
    std::vector<WeightedBlock> blocks;

    Eigen::Index dimension() const;
    // Offset of block b inside the concatenated decision vector.
    Eigen::Index block_offset(size_t b) const;
    double value(const std::vector<PhiVector>& phis) const;
};

Program event_program(const ProblemSpec& spec);

enum class NodeStatus { Open, Split, PrunedInfeasible, PrunedByIncumbent };

struct BnBNode {
    Simplex simplex;
    double bound = 0.0;  // in the minimization sense used internally
    std::optional<Eigen::VectorXd> argmin;
    NodeStatus status = NodeStatus::Open;
};

struct NodeBound {
    double bound = 0.0;  // +inf when the cell misses the relaxed feasible set
    std::optional<Eigen::VectorXd> argmin;
    bool fallback = false;  // strengthened LP broke down; plain relaxation used
};

// Relaxation of min sign * value over the cell; sign = +1 lower, -1 upper.
// The result is max(own LP value, parent_bound), both in that sense.
// With strengthen, the LP also carries per-cell coordinate ranges, cuts on
// knockoff = 1/psi and a McCormick envelope of knockoff*theta*omega, and
// bounds the larger of the two estimators. If that LP breaks down
// numerically the plain relaxation is used and fallback is set.
NodeBound bound_cell(const Program& program, const Simplex& s, double sign, double parent_bound,
                     bool strengthen = true);

// Event-mode wrapper; the returned bound is in user units (a lower bound on
// the minimum, or an upper bound on the maximum).
NodeBound bounding(const Simplex& s, const ProblemSpec& spec, BoundDirection direction = BoundDirection::Lower,
                   bool strengthen = true);

struct SelectedRecord {
    std::int64_t id = 0;
    std::int64_t parent_id = -1;
};

struct GlobalError {
    int L_n = 0;
    double geometric_factor = 1.0;
    double certified_error = 0.0;
};

// Bisections along the longest chain of selected nodes in which each one
// descends from the previous.
int longest_nested_chain(const std::vector<SelectedRecord>& history);
GlobalError global_error(int L_n, Eigen::Index dimension, double A, double s0_diameter);
GlobalError global_error(const std::vector<SelectedRecord>& history, Eigen::Index dimension, double A,
                         double s0_diameter);

// Constant of the convergence certificate for one block, bounded through
// the upper corner of the given box of gamma values.
double compute_A_block(const Eigen::VectorXd& corner, double psi_min);
double compute_A(const ProblemSpec& spec, const Simplex& s0);
double compute_A(const Program& program, const Simplex& s0);

// The adjustment move on columns i, j: new_i = alpha x_i + (1-alpha) x_j,
// new_j = (1-alpha) x_i + alpha x_j for each of theta, psi, omega.
PhiVector mix_pair(const PhiVector& phi, int i, int j, double alpha);

struct LocalResult {
    double value = 0.0;
    PhiVector phi;
    int moves = 0;
};

// Pairwise mixing search minimizing sign * value of one block.
LocalResult local_search(const BlockData& block, const LinearConstraintSystem& ir, const PhiVector& start,
                         double sign = 1.0);
LocalResult local_search(const ProblemSpec& spec, const PhiVector& start);

// Marks open nodes whose bound exceeds incumbent + margin. Returns how many.
size_t prune(std::vector<BnBNode>& nodes, double incumbent);

struct TraceRow {
    int iter = 0;
    std::int64_t selected_node_id = 0;
    double node_bound = 0.0;
    double best_bound = 0.0;
    double incumbent = 0.0;
    int L_n = 0;
    double geometric_factor = 1.0;
    double certified_error = 0.0;
    size_t open_nodes = 0;
};

struct RunOptions {
    BoundDirection direction = BoundDirection::Lower;
    double tol_delta = 1e-3;
    int max_iter = defaults::kMaxIter;
    bool prune = true;
    // Stop on the A-scaled error (default) or on the raw geometric factor.
    bool compare_scaled_error = true;
    bool local_search = true;
    bool strengthen = true;
    int threads = 1;
};

struct BoundResult {
    BoundDirection direction = BoundDirection::Lower;
    double bound = 0.0;
    double geometric_factor = 1.0;
    double certified_error = 0.0;
    double A = 0.0;
    double s0_diameter = 0.0;
    int iterations = 0;
    int L_n = 0;
    bool converged = false;  // certified error reached tol_delta
    bool gap_closed = false; // no open cell could improve on the incumbent
    std::optional<double> incumbent;
    std::vector<PhiVector> incumbent_phi;  // one per block
    std::vector<TraceRow> trace;
    size_t nodes_created = 0;
    size_t nodes_pruned = 0;
    size_t lp_fallbacks = 0;
};

BoundResult run_program(const Program& program, const RunOptions& options);
BoundResult run(const ProblemSpec& spec, const RunOptions& options);

struct BruteForceResult {
    double value = 0.0;  // +inf (min) / -inf (max) when no grid point is feasible
    std::optional<PhiVector> argbest;
    std::uint64_t feasible_points = 0;
};

// Exhaustive grid over the free coordinates (d <= 2) of one block,
// minimizing sign * value; value is reported unsigned.
BruteForceResult brute_force_block(const BlockData& block, double grid_step, double sign, int threads = 1);
double brute_force_min(const ProblemSpec& spec, double grid_step, int threads = 1);
double brute_force_max(const ProblemSpec& spec, double grid_step, int threads = 1);

} // namespace pisfp
