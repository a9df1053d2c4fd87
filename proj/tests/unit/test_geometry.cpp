#include "helpers.hpp"

#include "pisfp/dc.hpp"
#include "pisfp/errors.hpp"
#include "pisfp/geometry.hpp"
#include "pisfp/lp.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pisfp;

namespace {

// Random feasible phi: a mix of LP vertices under random costs.
std::vector<PhiVector> sample_feasible(const LinearConstraintSystem& ir, std::mt19937_64& rng, int count) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Eigen::VectorXd> vertices;
    for (int k = 0; k < 16; ++k) {
        Eigen::VectorXd c(ir.num_variables());
        for (Eigen::Index j = 0; j < c.size(); ++j) {
            c(j) = n(rng);
        }
        vertices.push_back(lp::solve(ir.as_lp(c, lp::Direction::Minimize)).point);
    }
    std::vector<PhiVector> out;
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd w(vertices.size());
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            w(j) = -std::log(u(rng) + 1e-300);
        }
        w /= w.sum();
        Eigen::VectorXd x = Eigen::VectorXd::Zero(ir.num_variables());
        for (size_t j = 0; j < vertices.size(); ++j) {
            x += w(static_cast<Eigen::Index>(j)) * vertices[j];
        }
        out.push_back(PhiVector::from_stacked(x));
    }
    return out;
}

} // namespace

TEST_CASE("geometry: bisection halves the volume and keeps containment") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd v(4, 5);
    for (int i = 0; i < v.size(); ++i) {
        v.data()[i] = u(rng);
    }
    const auto s = Simplex::make(v, 0);
    const auto [a, b] = bisect(s, 1);
    CHECK(volume(a) == doctest::Approx(volume(s) / 2).epsilon(1e-9));
    CHECK(volume(b) == doctest::Approx(volume(s) / 2).epsilon(1e-9));
    CHECK(a.parent_id == 0);
    CHECK(b.id == a.id + 1);
    CHECK(a.depth == 1);
    for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd w(5);
        for (int j = 0; j < 5; ++j) {
            w(j) = u(rng);
        }
        w /= w.sum();
        const Eigen::VectorXd x = v * w;
        CHECK(contains(s, x, 1e-10));
        CHECK((contains(a, x, 1e-10) || contains(b, x, 1e-10)));
    }
    const auto [t1, t2] = longest_edge(s);
    CHECK(t1 < t2);
    CHECK((v.col(t1) - v.col(t2)).norm() == doctest::Approx(s.diameter));
}

TEST_CASE("geometry: degenerate vertices are rejected") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 3);
    v << 0, 1, 2, 0, 1, 2;
    CHECK_FALSE(nondegenerate(v));
    CHECK_THROWS_AS(Simplex::make(v), DegenerateSimplex);
}

TEST_CASE("geometry: nested bisection diameters decay geometrically") {
    std::mt19937_64 rng(5);
    for (int d = 1; d <= 2; ++d) {
        const auto spec = eps_instance(d == 1 ? 4 : 2);
        Eigen::MatrixXd v;
        if (d == 2) {
            v = initialize_simplex(spec, build_ir_phi(spec)).simplex.vertices;
        } else {
            v = Eigen::MatrixXd::Zero(4, 5);
            v.rightCols(4) = Eigen::MatrixXd::Identity(4, 4);
        }
        Simplex s = Simplex::make(v);
        const double dia0 = s.diameter;
        const int n = static_cast<int>(s.dim());
        for (int L = 1; L <= 12 * n; ++L) {
            auto [a, b] = bisect(s, 2 * L);
            s = (rng() & 1) ? a : b;
            const double bound = std::pow(std::sqrt(3.0) / 2.0, L / n) * dia0 + 1e-12;
            CHECK(s.diameter <= bound);
            CHECK(s.depth == L);
        }
    }
}

TEST_CASE("geometry: the initial simplex encloses sampled feasible points") {
    std::mt19937_64 rng(6);
    for (int e = 1; e <= 4; ++e) {
        const auto spec = eps_instance(e);
        const auto ir = build_ir_phi(spec);
        const auto init = initialize_simplex(spec, ir);
        int inside = 0;
        const auto samples = sample_feasible(ir, rng, 250);
        for (const auto& phi : samples) {
            REQUIRE(ir.contains(phi.stacked(), 1e-9));
            inside += contains(init.simplex, GammaVector::from_phi(phi).values, 1e-9) ? 1 : 0;
        }
        CHECK(inside == 250);
    }
}
