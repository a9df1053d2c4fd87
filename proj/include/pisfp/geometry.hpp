#pragma once

#include "pisfp/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace pisfp {

// n+1 vertices in R^n, stored as columns.
struct Simplex {
    Eigen::MatrixXd vertices;
    double diameter = 0.0;
    std::int64_t id = 0;
    std::int64_t parent_id = -1;
    int depth = 0;  // bisections along the lineage from the root

    Eigen::Index dim() const { return vertices.rows(); }
    Eigen::VectorXd barycenter() const { return vertices.rowwise().mean(); }

    // Throws DegenerateSimplex when the vertex system is singular.
    static Simplex make(Eigen::MatrixXd vertices, std::int64_t id = 0, std::int64_t parent_id = -1, int depth = 0);
};

double diameter(const Eigen::MatrixXd& vertices);
// True when the ones-augmented vertex matrix has full rank at the pivot tolerance.
bool nondegenerate(const Eigen::MatrixXd& vertices);
Eigen::VectorXd barycentric(const Simplex& s, const Eigen::VectorXd& point);
bool contains(const Simplex& s, const Eigen::VectorXd& point, double tolerance);
double volume(const Simplex& s);

// Longest edge, ties to the lexicographically smallest pair (t1 < t2).
std::pair<Eigen::Index, Eigen::Index> longest_edge(const Simplex& s);
// First child replaces t1 by the midpoint, second replaces t2.
std::pair<Simplex, Simplex> bisect(const Simplex& s, std::int64_t first_child_id);

// Per-coordinate ranges of the reformulated vector over a block's
// linearized feasible set, and the simplex spanned from them.
struct BlockRange {
    Eigen::VectorXd gamma_lower;  // 4d, order (psi_knockoff, theta, psi, omega)
    Eigen::VectorXd gamma_upper;
    double psi_l = 0.0;
    double psi_u = 0.0;
    double alpha = 0.0;
};
BlockRange block_range(const BlockData& block, const LinearConstraintSystem& ir);

// Simplex with vertex 0 at gamma_lower and vertex i at
// gamma_lower + (alpha - sum gamma_lower) e_i.
Simplex span_simplex(const Eigen::VectorXd& gamma_lower, double alpha);

struct InitialSimplex {
    Simplex simplex;
    BlockRange range;
};
InitialSimplex initialize_simplex(const ProblemSpec& spec, const LinearConstraintSystem& ir);

} // namespace pisfp
