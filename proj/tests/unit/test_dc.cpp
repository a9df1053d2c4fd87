#include "pisfp/dc.hpp"
#include "pisfp/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pisfp;

namespace {

Eigen::VectorXd random_gamma(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> k(1.0, 20.0);
    Eigen::VectorXd g(4 * d);
    for (int i = 0; i < 4 * d; ++i) {
        g(i) = i < d ? k(rng) : u(rng);
    }
    return g;
}

std::vector<FnId> all_functions(int d) {
    std::vector<FnId> out = {{Component::C1, 0}, {Component::C2, 0}};
    for (int i = 0; i < d; ++i) {
        out.push_back({Component::D1, i});
        out.push_back({Component::D2, i});
    }
    return out;
}

} // namespace

TEST_CASE("dc: the decompositions reproduce the bilinear terms") {
    std::mt19937_64 rng(1);
    for (int d = 1; d <= 3; ++d) {
        for (int t = 0; t < 2000; ++t) {
            const auto g = random_gamma(rng, d);
            const auto [c1, c2] = eval_c(g);
            double target = 0.0;
            for (int i = 0; i < d; ++i) {
                target += g(i) * g(d + i) * g(3 * d + i);
            }
            CHECK(std::abs((c1 - c2) - target) <= 1e-9 * (1 + std::abs(c1)));
            for (int i = 0; i < d; ++i) {
                const auto [d1, d2] = eval_d(g, i);
                CHECK(std::abs((d1 - d2) - g(i) * g(2 * d + i)) <= 1e-12 * (1 + std::abs(d1)));
            }
        }
    }
}

TEST_CASE("dc: gradients and hessians match finite differences") {
    std::mt19937_64 rng(2);
    for (int d = 1; d <= 3; ++d) {
        for (int t = 0; t < 50; ++t) {
            const auto g = random_gamma(rng, d);
            for (const auto fn : all_functions(d)) {
                const auto grad = gradient(fn, g);
                const auto hess = hessian(fn, g);
                const double h = 1e-6;
                for (int k = 0; k < 4 * d; ++k) {
                    Eigen::VectorXd p = g;
                    Eigen::VectorXd m = g;
                    p(k) += h;
                    m(k) -= h;
                    const double fd = (evaluate(fn, p) - evaluate(fn, m)) / (2 * h);
                    CHECK(std::abs(fd - grad(k)) <= 1e-5 * std::max(1.0, std::abs(grad(k))));
                    const Eigen::VectorXd hd = (gradient(fn, p) - gradient(fn, m)) / (2 * h);
                    CHECK((hd - hess.col(k)).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, hess.col(k).cwiseAbs().maxCoeff()));
                }
                // convexity: hessian is positive semidefinite
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
                CHECK(es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("dc: tangent below, secant above on simplices") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int d = 1;
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd v(4 * d, 4 * d + 1);
        for (int c = 0; c < v.cols(); ++c) {
            v.col(c) = random_gamma(rng, d);
        }
        const auto s = Simplex::make(v);
        for (const auto fn : all_functions(d)) {
            const auto sec = secant(fn, s);
            const auto tan = tangent(fn, s.barycenter());
            for (int c = 0; c < v.cols(); ++c) {
                CHECK(sec(v.col(c)) == doctest::Approx(evaluate(fn, v.col(c))).epsilon(1e-9));
            }
            for (int k = 0; k < 20; ++k) {
                Eigen::VectorXd w(v.cols());
                for (int c = 0; c < w.size(); ++c) {
                    w(c) = -std::log(u(rng) + 1e-300);
                }
                w /= w.sum();
                const Eigen::VectorXd x = v * w;
                const double f = evaluate(fn, x);
                const double slack = 1e-9 * (1 + std::abs(f));
                CHECK(tan(x) <= f + slack);
                CHECK(f <= sec(x) + slack);
            }
        }
    }
}

TEST_CASE("dc: knockoff round trip") {
    const PhiVector phi{Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.3, 0.4)};
    const auto g = GammaVector::from_phi(phi);
    CHECK(g.psi_knockoff()(0) == doctest::Approx(4.0));
    CHECK(g.phi().stacked() == phi.stacked());
    CHECK(eval_sos(phi, 0.01) == doctest::Approx(0.1 * 0.3 / 0.25 + 0.2 * 0.4 / 0.5));
}
