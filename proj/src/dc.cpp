#include "pisfp/dc.hpp"

#include "pisfp/config.hpp"
#include "pisfp/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace pisfp {

GammaVector GammaVector::from_phi(const PhiVector& phi) {
    const Eigen::Index d = phi.theta.size();
    GammaVector g;
    g.values.resize(4 * d);
    g.values << phi.psi.cwiseInverse(), phi.theta, phi.psi, phi.omega;
    return g;
}

PhiVector GammaVector::phi() const { return PhiVector{theta(), psi(), omega()}; }

double eval_sos(const PhiVector& phi, double psi_min) {
    double s = 0.0;
    for (int i = 0; i < phi.d(); ++i) {
        if (phi.psi(i) < psi_min) {
            throw DomainError("psi[" + std::to_string(i) + "] below psi_min");
        }
        s += phi.theta(i) * phi.omega(i) / phi.psi(i);
    }
    return s;
}

namespace {

// The cyclic triple of coordinate i: (knockoff, theta, omega).
std::array<Eigen::Index, 3> triple(Eigen::Index d, Eigen::Index i) { return {i, d + i, 3 * d + i}; }

Eigen::Index dim_of(const Eigen::VectorXd& g) {
    if (g.size() % 4 != 0 || g.size() == 0) {
        throw ShapeMismatch("gamma length must be a positive multiple of 4");
    }
    return g.size() / 4;
}

// C1 for one triple: (a+b+c)^3/6 + (a^4+b^4+c^4)/2 + (a^2+b^2+c^2)/2
double c1_term(double a, double b, double c) {
    const double s = a + b + c;
    return s * s * s / 6.0 + 0.5 * (a * a * a * a + b * b * b * b + c * c * c * c) + 0.5 * (a * a + b * b + c * c);
}

// Pair piece of C2: ((x^2+y)^2 + (x+y^2)^2)/4 over cyclic pairs (a,b),(b,c),(c,a).
double pair_term(double x, double y) {
    const double p = x * x + y;
    const double q = x + y * y;
    return 0.25 * (p * p + q * q);
}

double c2_term(double a, double b, double c) {
    return (a * a * a + b * b * b + c * c * c) / 6.0 + pair_term(a, b) + pair_term(b, c) + pair_term(c, a);
}

} // namespace

std::pair<double, double> eval_c(const Eigen::VectorXd& g) {
    const Eigen::Index d = dim_of(g);
    double c1 = 0.0;
    double c2 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto t = triple(d, i);
        c1 += c1_term(g(t[0]), g(t[1]), g(t[2]));
        c2 += c2_term(g(t[0]), g(t[1]), g(t[2]));
    }
    return {c1, c2};
}

std::pair<double, double> eval_d(const Eigen::VectorXd& g, int i) {
    const Eigen::Index d = dim_of(g);
    if (i < 0 || i >= d) {
        throw ValidationError("D index out of range");
    }
    const double a = g(i);
    const double p = g(2 * d + i);
    return {0.5 * (a + p) * (a + p), 0.5 * (a * a + p * p)};
}

double evaluate(FnId fn, const Eigen::VectorXd& g) {
    switch (fn.kind) {
    case Component::C1: return eval_c(g).first;
    case Component::C2: return eval_c(g).second;
    case Component::D1: return eval_d(g, fn.index).first;
    case Component::D2: return eval_d(g, fn.index).second;
    }
    return 0.0;
}

Eigen::VectorXd gradient(FnId fn, const Eigen::VectorXd& g) {
    const Eigen::Index d = dim_of(g);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
    switch (fn.kind) {
    case Component::C1:
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto t = triple(d, i);
            const double s = g(t[0]) + g(t[1]) + g(t[2]);
            for (const auto k : t) {
                const double x = g(k);
                out(k) = 0.5 * s * s + 2.0 * x * x * x + x;
            }
        }
        break;
    case Component::C2:
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto t = triple(d, i);
            for (const auto k : t) {
                out(k) += 0.5 * g(k) * g(k);
            }
            for (int e = 0; e < 3; ++e) {
                const auto kx = t[static_cast<size_t>(e)];
                const auto ky = t[static_cast<size_t>((e + 1) % 3)];
                const double x = g(kx);
                const double y = g(ky);
                out(kx) += x * (x * x + y) + 0.5 * (x + y * y);
                out(ky) += 0.5 * (x * x + y) + y * (x + y * y);
            }
        }
        break;
    case Component::D1: {
        const double s = g(fn.index) + g(2 * d + fn.index);
        out(fn.index) = s;
        out(2 * d + fn.index) = s;
        break;
    }
    case Component::D2:
        out(fn.index) = g(fn.index);
        out(2 * d + fn.index) = g(2 * d + fn.index);
        break;
    }
    return out;
}

Eigen::MatrixXd hessian(FnId fn, const Eigen::VectorXd& g) {
    const Eigen::Index d = dim_of(g);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g.size(), g.size());
    switch (fn.kind) {
    case Component::C1:
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto t = triple(d, i);
            const double s = g(t[0]) + g(t[1]) + g(t[2]);
            for (const auto r : t) {
                for (const auto c : t) {
                    h(r, c) = s;
                }
                h(r, r) += 6.0 * g(r) * g(r) + 1.0;
            }
        }
        break;
    case Component::C2:
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto t = triple(d, i);
            for (const auto k : t) {
                h(k, k) += g(k);
            }
            for (int e = 0; e < 3; ++e) {
                const auto kx = t[static_cast<size_t>(e)];
                const auto ky = t[static_cast<size_t>((e + 1) % 3)];
                const double x = g(kx);
                const double y = g(ky);
                h(kx, kx) += 3.0 * x * x + y + 0.5;
                h(ky, ky) += 0.5 + x + 3.0 * y * y;
                h(kx, ky) += x + y;
                h(ky, kx) += x + y;
            }
        }
        break;
    case Component::D1: {
        const Eigen::Index a = fn.index;
        const Eigen::Index p = 2 * d + fn.index;
        h(a, a) = h(a, p) = h(p, a) = h(p, p) = 1.0;
        break;
    }
    case Component::D2:
        h(fn.index, fn.index) = 1.0;
        h(2 * d + fn.index, 2 * d + fn.index) = 1.0;
        break;
    }
    return h;
}

AffineFunction tangent(FnId fn, const Eigen::VectorXd& anchor) {
    AffineFunction a;
    a.coefficients = gradient(fn, anchor);
    a.constant = evaluate(fn, anchor) - a.coefficients.dot(anchor);
    return a;
}

AffineFunction secant(FnId fn, const Simplex& s) {
    const Eigen::Index n = s.dim();
    if (!nondegenerate(s.vertices)) {
        throw DegenerateSimplex("secant on a degenerate simplex");
    }
    // Rows [v_j^T 1] [c; c0] = F(v_j).
    Eigen::MatrixXd m(n + 1, n + 1);
    Eigen::VectorXd f(n + 1);
    for (Eigen::Index j = 0; j <= n; ++j) {
        m.row(j).head(n) = s.vertices.col(j).transpose();
        m(j, n) = 1.0;
        f(j) = evaluate(fn, s.vertices.col(j));
    }
    const Eigen::VectorXd sol = m.partialPivLu().solve(f);
    AffineFunction a;
    a.coefficients = sol.head(n);
    a.constant = sol(n);
    return a;
}

} // namespace pisfp
