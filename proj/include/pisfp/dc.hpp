#pragma once

#include "pisfp/geometry.hpp"
#include "pisfp/model.hpp"

#include <Eigen/Dense>

#include <utility>

namespace pisfp {

// gamma = (psi_knockoff, theta, psi, omega), each of length d.
struct GammaVector {
    Eigen::VectorXd values;

    int d() const { return static_cast<int>(values.size() / 4); }
    auto psi_knockoff() const { return values.segment(0, d()); }
    auto theta() const { return values.segment(d(), d()); }
    auto psi() const { return values.segment(2 * d(), d()); }
    auto omega() const { return values.segment(3 * d(), d()); }

    static GammaVector from_phi(const PhiVector& phi);  // knockoff = 1/psi
    PhiVector phi() const;
};

struct AffineFunction {
    Eigen::VectorXd coefficients;
    double constant = 0.0;

    double operator()(const Eigen::VectorXd& x) const { return coefficients.dot(x) + constant; }
};

enum class Component { C1, C2, D1, D2 };

struct FnId {
    Component kind;
    int index = 0;  // which i for D1/D2
};

// sum theta_i omega_i / psi_i; DomainError when psi_i < psi_min.
double eval_sos(const PhiVector& phi, double psi_min);

std::pair<double, double> eval_c(const Eigen::VectorXd& g);
std::pair<double, double> eval_d(const Eigen::VectorXd& g, int i);

double evaluate(FnId fn, const Eigen::VectorXd& g);
Eigen::VectorXd gradient(FnId fn, const Eigen::VectorXd& g);
Eigen::MatrixXd hessian(FnId fn, const Eigen::VectorXd& g);

AffineFunction tangent(FnId fn, const Eigen::VectorXd& anchor);
// Affine interpolant of fn at the simplex vertices (solves the vertex system).
AffineFunction secant(FnId fn, const Simplex& s);

} // namespace pisfp
