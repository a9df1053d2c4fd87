#include "pisfp/geometry.hpp"

#include "pisfp/config.hpp"
#include "pisfp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pisfp {

namespace {

Eigen::MatrixXd edge_matrix(const Eigen::MatrixXd& v) {
    const Eigen::Index n = v.rows();
    Eigen::MatrixXd e(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e.col(j) = v.col(j + 1) - v.col(0);
    }
    return e;
}

// Keeps the spanned simplex from collapsing when the bound on sum(gamma) is
// attained exactly (point-identified inputs).
constexpr double kMinSpan = 1e-6;

} // namespace

double diameter(const Eigen::MatrixXd& vertices) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < vertices.cols(); ++i) {
        for (Eigen::Index j = i + 1; j < vertices.cols(); ++j) {
            best = std::max(best, (vertices.col(i) - vertices.col(j)).squaredNorm());
        }
    }
    return std::sqrt(best);
}

bool nondegenerate(const Eigen::MatrixXd& vertices) {
    const Eigen::Index n = vertices.rows();
    if (vertices.cols() != n + 1) {
        return false;
    }
    if (n == 0) {
        return true;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(edge_matrix(vertices));
    lu.setThreshold(tol::kSimplexPivot);
    return lu.rank() == n;
}

Simplex Simplex::make(Eigen::MatrixXd vertices, std::int64_t id, std::int64_t parent_id, int depth) {
    if (!nondegenerate(vertices)) {
        throw DegenerateSimplex("vertex system is singular (simplex " + std::to_string(id) + ")");
    }
    Simplex s;
    s.diameter = pisfp::diameter(vertices);
    s.vertices = std::move(vertices);
    s.id = id;
    s.parent_id = parent_id;
    s.depth = depth;
    return s;
}

Eigen::VectorXd barycentric(const Simplex& s, const Eigen::VectorXd& point) {
    const Eigen::Index n = s.dim();
    if (point.size() != n) {
        throw ShapeMismatch("point dimension differs from simplex dimension");
    }
    if (!nondegenerate(s.vertices)) {
        throw DegenerateSimplex("barycentric coordinates on a degenerate simplex");
    }
    const Eigen::VectorXd tail = edge_matrix(s.vertices).partialPivLu().solve(point - s.vertices.col(0));
    Eigen::VectorXd lambda(n + 1);
    lambda(0) = 1.0 - tail.sum();
    lambda.tail(n) = tail;
    return lambda;
}

bool contains(const Simplex& s, const Eigen::VectorXd& point, double tolerance) {
    const Eigen::VectorXd lambda = barycentric(s, point);
    return lambda.minCoeff() >= -tolerance && std::abs(lambda.sum() - 1.0) <= tolerance;
}

double volume(const Simplex& s) {
    const Eigen::Index n = s.dim();
    double fact = 1.0;
    for (Eigen::Index k = 2; k <= n; ++k) {
        fact *= static_cast<double>(k);
    }
    return std::abs(edge_matrix(s.vertices).determinant()) / fact;
}

std::pair<Eigen::Index, Eigen::Index> longest_edge(const Simplex& s) {
    std::pair<Eigen::Index, Eigen::Index> best{0, 1};
    double best_len = -1.0;
    const auto& v = s.vertices;
    for (Eigen::Index i = 0; i < v.cols(); ++i) {
        for (Eigen::Index j = i + 1; j < v.cols(); ++j) {
            const double len = (v.col(i) - v.col(j)).squaredNorm();
            if (len > best_len) {
                best_len = len;
                best = {i, j};
            }
        }
    }
    return best;
}

std::pair<Simplex, Simplex> bisect(const Simplex& s, std::int64_t first_child_id) {
    const auto [t1, t2] = longest_edge(s);
    const Eigen::VectorXd mid = 0.5 * (s.vertices.col(t1) + s.vertices.col(t2));
    Eigen::MatrixXd a = s.vertices;
    Eigen::MatrixXd b = s.vertices;
    a.col(t1) = mid;
    b.col(t2) = mid;
    return {Simplex::make(std::move(a), first_child_id, s.id, s.depth + 1),
            Simplex::make(std::move(b), first_child_id + 1, s.id, s.depth + 1)};
}

BlockRange block_range(const BlockData& block, const LinearConstraintSystem& ir) {
    const int d = block.d();
    if (!lp::feasible_point(ir.rows, ir.senses, ir.rhs, ir.lower, ir.upper)) {
        throw EmptyFeasibleRegion("the linearized feasible set is empty");
    }
    BlockRange r;
    r.gamma_lower.resize(4 * d);
    r.gamma_upper.resize(4 * d);
    for (int k = 0; k < 3 * d; ++k) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(3 * d);
        c(k) = 1.0;
        const auto lo = lp::solve(ir.as_lp(c, lp::Direction::Minimize));
        const auto hi = lp::solve(ir.as_lp(c, lp::Direction::Maximize));
        if (lo.status != lp::Status::Optimal || hi.status != lp::Status::Optimal) {
            throw EmptyFeasibleRegion("coordinate range LP did not solve");
        }
        r.gamma_lower(d + k) = std::max(lo.value, ir.lower(k));
        r.gamma_upper(d + k) = std::min(hi.value, ir.upper(k));
    }
    const auto psi_lo = r.gamma_lower.segment(2 * d, d);
    const auto psi_hi = r.gamma_upper.segment(2 * d, d);
    for (int i = 0; i < d; ++i) {
        r.gamma_lower(i) = 1.0 / psi_hi(i);
        r.gamma_upper(i) = 1.0 / block.psi_min;
    }
    r.psi_l = psi_lo.minCoeff();
    r.psi_u = psi_hi.maxCoeff();
    const double dd = static_cast<double>(d);
    r.alpha = block.sum_theta + block.sum_psi + block.sum_omega +
              dd * dd * (r.psi_l + r.psi_u) * (r.psi_l + r.psi_u) / (4.0 * block.sum_psi * r.psi_l * r.psi_u);
    return r;
}

Simplex span_simplex(const Eigen::VectorXd& gamma_lower, double alpha) {
    const Eigen::Index n = gamma_lower.size();
    const double span = std::max(alpha - gamma_lower.sum(), kMinSpan * (1.0 + std::abs(alpha)));
    Eigen::MatrixXd v(n, n + 1);
    v.col(0) = gamma_lower;
    for (Eigen::Index i = 0; i < n; ++i) {
        v.col(i + 1) = gamma_lower;
        v(i, i + 1) += span;
    }
    return Simplex::make(std::move(v), 0, -1, 0);
}

InitialSimplex initialize_simplex(const ProblemSpec& spec, const LinearConstraintSystem& ir) {
    InitialSimplex out;
    out.range = block_range(event_block(spec), ir);
    out.simplex = span_simplex(out.range.gamma_lower, out.range.alpha);
    return out;
}

} // namespace pisfp
