#include "pisfp/tightness.hpp"

#include "pisfp/config.hpp"
#include "pisfp/errors.hpp"
#include "pisfp/lp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace pisfp {

JointWitness JointWitness::zeros(int n_w, int d, int n_x) {
    JointWitness w;
    w.n_w = n_w;
    w.d = d;
    w.n_x = n_x;
    w.q.assign(static_cast<size_t>(2 * n_w * d * n_x), 0.0);
    w.P = Eigen::MatrixXd::Zero(n_w, d);
    return w;
}

std::string WitnessReport::describe() const {
    std::ostringstream os;
    os << (ok ? "witness verified" : "witness rejected") << "; worst violations: nonnegativity=" << nonnegativity
       << " mass=" << mass << " stochastic=" << stochastic << " transition_bounds=" << transition_bounds
       << " factorization=" << factorization << " marginal=" << marginal << " compatibility=" << compatibility;
    return os.str();
}

namespace {

void check_shapes(const JointWitness& w, const PhiVector& phi, const ProblemSpec& spec) {
    if (w.n_w != spec.n_w || w.d != spec.d || w.n_x != spec.n_x ||
        w.q.size() != static_cast<size_t>(2 * spec.n_w * spec.d * spec.n_x) || w.P.rows() != spec.n_w ||
        w.P.cols() != spec.d) {
        throw ShapeMismatch("witness shape does not match the problem dims");
    }
    if (phi.d() != spec.d || phi.psi.size() != spec.d || phi.omega.size() != spec.d) {
        throw ShapeMismatch("phi length does not match d");
    }
    if (spec.observed.n_y != 2) {
        throw ShapeMismatch("witness needs the event/complement table (two outcome rows)");
    }
}

} // namespace

WitnessReport verify_witness(const JointWitness& w, const PhiVector& phi, const ProblemSpec& spec) {
    check_shapes(w, phi, spec);
    WitnessReport r;
    const int nw = spec.n_w;
    const int d = spec.d;
    const int nx = spec.n_x;
    const int xs = spec.target_x;

    double total = 0.0;
    for (const double v : w.q) {
        r.nonnegativity = std::max(r.nonnegativity, -v);
        total += v;
    }
    r.mass = std::abs(total - 1.0);

    for (int u = 0; u < d; ++u) {
        r.stochastic = std::max(r.stochastic, std::abs(w.P.col(u).sum() - 1.0));
        for (int k = 0; k < nw; ++k) {
            r.nonnegativity = std::max(r.nonnegativity, -w.P(k, u));
            r.transition_bounds = std::max({r.transition_bounds, spec.transition_bounds.lower(k, u) - w.P(k, u),
                                            w.P(k, u) - spec.transition_bounds.upper(k, u)});
        }
    }

    // W independent of (Y, X) given U: checked per outcome row, which also
    // gives the summed form.
    for (int y = 0; y < 2; ++y) {
        for (int u = 0; u < d; ++u) {
            for (int x = 0; x < nx; ++x) {
                double over_w = 0.0;
                for (int k = 0; k < nw; ++k) {
                    over_w += w.at(y, k, u, x);
                }
                for (int k = 0; k < nw; ++k) {
                    r.factorization = std::max(r.factorization, std::abs(w.at(y, k, u, x) - w.P(k, u) * over_w));
                }
            }
        }
    }

    for (int y = 0; y < 2; ++y) {
        for (int k = 0; k < nw; ++k) {
            for (int x = 0; x < nx; ++x) {
                double s = 0.0;
                for (int u = 0; u < d; ++u) {
                    s += w.at(y, k, u, x);
                }
                r.marginal = std::max(r.marginal, std::abs(s - spec.observed.at(y, k, x)));
            }
        }
    }

    for (int u = 0; u < d; ++u) {
        double theta = 0.0;
        double psi = 0.0;
        double omega = 0.0;
        for (int k = 0; k < nw; ++k) {
            theta += w.at(0, k, u, xs);
            for (int y = 0; y < 2; ++y) {
                psi += w.at(y, k, u, xs);
                for (int x = 0; x < nx; ++x) {
                    if (x != xs) {
                        omega += w.at(y, k, u, x);
                    }
                }
            }
        }
        r.compatibility = std::max({r.compatibility, std::abs(theta - phi.theta(u)), std::abs(psi - phi.psi(u)),
                                    std::abs(omega - phi.omega(u))});
    }

    r.ok = r.nonnegativity <= tol::kFeasibility && r.mass <= tol::kFeasibility && r.stochastic <= tol::kFeasibility &&
           r.transition_bounds <= tol::kFeasibility && r.factorization <= tol::kWitnessMarginal &&
           r.marginal <= tol::kWitnessMarginal && r.compatibility <= tol::kWitnessMarginal;
    return r;
}

// ---- search ----

namespace {

// q[y][w][u][x] = P[w][u] r[y][u][x]; the factorization then holds by
// construction and every other condition is linear in r for fixed P and
// linear in P for fixed r. Each condition is an equality
// sum_u coef(u) * (P-or-r terms) = target.
struct Layout {
    int nw;
    int d;
    int nx;
    int xs;

    Eigen::Index r_index(int y, int u, int x) const { return (y * d + u) * nx + x; }
    Eigen::Index r_size() const { return 2 * d * nx; }
    Eigen::Index p_index(int k, int u) const { return k * d + u; }
    Eigen::Index p_size() const { return nw * d; }
};

// Equalities in r for fixed P: rows x r_size.
void r_system(const Layout& L, const Eigen::MatrixXd& P, const PhiVector& phi, const ProblemSpec& spec,
              Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    const int rows = 2 * L.nw * L.nx + 3 * L.d;
    a = Eigen::MatrixXd::Zero(rows, L.r_size());
    b = Eigen::VectorXd::Zero(rows);
    int row = 0;
    for (int y = 0; y < 2; ++y) {
        for (int k = 0; k < L.nw; ++k) {
            for (int x = 0; x < L.nx; ++x, ++row) {
                for (int u = 0; u < L.d; ++u) {
                    a(row, L.r_index(y, u, x)) = P(k, u);
                }
                b(row) = spec.observed.at(y, k, x);
            }
        }
    }
    for (int u = 0; u < L.d; ++u) {
        const double colsum = P.col(u).sum();
        a(row, L.r_index(0, u, L.xs)) = colsum;
        b(row++) = phi.theta(u);
        a(row, L.r_index(0, u, L.xs)) = colsum;
        a(row, L.r_index(1, u, L.xs)) = colsum;
        b(row++) = phi.psi(u);
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < L.nx; ++x) {
                if (x != L.xs) {
                    a(row, L.r_index(y, u, x)) = colsum;
                }
            }
        }
        b(row++) = phi.omega(u);
    }
}

// Equalities in P for fixed r (column sums are kept hard separately).
void p_system(const Layout& L, const Eigen::VectorXd& r, const PhiVector& phi, const ProblemSpec& spec,
              Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    const int rows = 2 * L.nw * L.nx + 3 * L.d;
    a = Eigen::MatrixXd::Zero(rows, L.p_size());
    b = Eigen::VectorXd::Zero(rows);
    int row = 0;
    for (int y = 0; y < 2; ++y) {
        for (int k = 0; k < L.nw; ++k) {
            for (int x = 0; x < L.nx; ++x, ++row) {
                for (int u = 0; u < L.d; ++u) {
                    a(row, L.p_index(k, u)) = r(L.r_index(y, u, x));
                }
                b(row) = spec.observed.at(y, k, x);
            }
        }
    }
    for (int u = 0; u < L.d; ++u) {
        double omega_r = 0.0;
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < L.nx; ++x) {
                if (x != L.xs) {
                    omega_r += r(L.r_index(y, u, x));
                }
            }
        }
        const double theta_r = r(L.r_index(0, u, L.xs));
        const double psi_r = theta_r + r(L.r_index(1, u, L.xs));
        for (int k = 0; k < L.nw; ++k) {
            a(row, L.p_index(k, u)) = theta_r;
            a(row + 1, L.p_index(k, u)) = psi_r;
            a(row + 2, L.p_index(k, u)) = omega_r;
        }
        b(row) = phi.theta(u);
        b(row + 1) = phi.psi(u);
        b(row + 2) = phi.omega(u);
        row += 3;
    }
}

// min sum |a x - b| with x in the given box plus optional hard equalities.
// Returns (x, violation) or nullopt if the hard part is infeasible.
std::optional<std::pair<Eigen::VectorXd, double>> l1_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                                         const Eigen::MatrixXd& hard, const Eigen::VectorXd& hard_rhs) {
    const Eigen::Index n = a.cols();
    const Eigen::Index m = a.rows();
    lp::LpProblem p = lp::LpProblem::with_variables(n + 2 * m);
    p.lower.head(n) = lower;
    p.upper.head(n) = upper;
    p.objective.tail(2 * m).setOnes();
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n + 2 * m);
        row.head(n) = a.row(i).transpose();
        row(n + 2 * i) = 1.0;       // covers a x < b
        row(n + 2 * i + 1) = -1.0;  // covers a x > b
        p.add_row(row, lp::RowSense::Equal, b(i));
    }
    for (Eigen::Index i = 0; i < hard.rows(); ++i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n + 2 * m);
        row.head(n) = hard.row(i).transpose();
        p.add_row(row, lp::RowSense::Equal, hard_rhs(i));
    }
    const auto sol = lp::solve(p);
    if (sol.status != lp::Status::Optimal) {
        return std::nullopt;
    }
    return std::make_pair(Eigen::VectorXd(sol.point.head(n)), sol.value);
}

JointWitness assemble(const Layout& L, const Eigen::MatrixXd& P, const Eigen::VectorXd& r) {
    JointWitness w = JointWitness::zeros(L.nw, L.d, L.nx);
    w.P = P;
    for (int y = 0; y < 2; ++y) {
        for (int k = 0; k < L.nw; ++k) {
            for (int u = 0; u < L.d; ++u) {
                for (int x = 0; x < L.nx; ++x) {
                    w.at(y, k, u, x) = P(k, u) * r(L.r_index(y, u, x));
                }
            }
        }
    }
    return w;
}

struct PBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::MatrixXd column_sums;
    Eigen::VectorXd ones;
};

PBox p_box(const Layout& L, const ProblemSpec& spec) {
    PBox box;
    box.lower.resize(L.p_size());
    box.upper.resize(L.p_size());
    box.column_sums = Eigen::MatrixXd::Zero(L.d, L.p_size());
    box.ones = Eigen::VectorXd::Ones(L.d);
    for (int k = 0; k < L.nw; ++k) {
        for (int u = 0; u < L.d; ++u) {
            box.lower(L.p_index(k, u)) = spec.transition_bounds.lower(k, u);
            box.upper(L.p_index(k, u)) = spec.transition_bounds.upper(k, u);
            box.column_sums(u, L.p_index(k, u)) = 1.0;
        }
    }
    return box;
}

Eigen::MatrixXd unflatten_p(const Layout& L, const Eigen::VectorXd& v) {
    Eigen::MatrixXd P(L.nw, L.d);
    for (int k = 0; k < L.nw; ++k) {
        for (int u = 0; u < L.d; ++u) {
            P(k, u) = v(L.p_index(k, u));
        }
    }
    return P;
}

// A random point of the transition polytope: a vertex for a random cost.
std::optional<Eigen::MatrixXd> random_transition(const Layout& L, const PBox& box, std::mt19937_64& rng,
                                                 bool plain) {
    lp::LpProblem p = lp::LpProblem::with_variables(L.p_size());
    p.lower = box.lower;
    p.upper = box.upper;
    if (!plain) {
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (Eigen::Index j = 0; j < L.p_size(); ++j) {
            p.objective(j) = unit(rng);
        }
    }
    for (int u = 0; u < L.d; ++u) {
        p.add_row(box.column_sums.row(u).transpose(), lp::RowSense::Equal, 1.0);
    }
    const auto sol = lp::solve(p);
    if (sol.status != lp::Status::Optimal) {
        return std::nullopt;
    }
    Eigen::VectorXd v = sol.point;
    if (!plain) {
        // pull toward the interior so the start is not always a vertex
        lp::LpProblem centre = p;
        centre.objective = -p.objective;
        const auto other = lp::solve(centre);
        if (other.status == lp::Status::Optimal) {
            const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            v = t * v + (1.0 - t) * other.point;
        }
    }
    return unflatten_p(L, v);
}

} // namespace

WitnessSearch search_witness(const PhiVector& phi, const ProblemSpec& spec, int restarts, std::uint64_t seed) {
    WitnessSearch out;
    out.violation = std::numeric_limits<double>::infinity();
    if (phi.d() != spec.d || spec.observed.n_y != 2) {
        return out;
    }
    // precondition: phi must satisfy the linearized constraints
    const auto ir = build_ir_phi(spec);
    if (ir.max_violation(phi.stacked()) > tol::kFeasibility) {
        return out;
    }
    const Layout L{spec.n_w, spec.d, spec.n_x, spec.target_x};
    const PBox box = p_box(L, spec);
    const Eigen::VectorXd r_lo = Eigen::VectorXd::Zero(L.r_size());
    const Eigen::VectorXd r_hi = Eigen::VectorXd::Constant(L.r_size(), lp::kInf);
    const Eigen::MatrixXd no_rows(0, L.r_size());
    const Eigen::VectorXd no_rhs(0);

    for (int k = 0; k < restarts; ++k) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
        auto start = random_transition(L, box, rng, k == 0);
        if (!start) {
            return out;  // transition polytope empty
        }
        Eigen::MatrixXd P = *start;
        Eigen::VectorXd r;
        double previous = std::numeric_limits<double>::infinity();
        int rounds = 0;
        for (; rounds < tol::kWitnessMaxRounds; ++rounds) {
            Eigen::MatrixXd a;
            Eigen::VectorXd b;
            r_system(L, P, phi, spec, a, b);
            const auto fit_r = l1_fit(a, b, r_lo, r_hi, no_rows, no_rhs);
            if (!fit_r) {
                break;
            }
            r = fit_r->first;
            p_system(L, r, phi, spec, a, b);
            const auto fit_p = l1_fit(a, b, box.lower, box.upper, box.column_sums, box.ones);
            if (!fit_p) {
                break;
            }
            P = unflatten_p(L, fit_p->first);
            const double violation = fit_p->second;
            out.violation = std::min(out.violation, violation);
            if (violation < tol::kWitnessAccept * 1e-3 || previous - violation < tol::kWitnessStagnation) {
                ++rounds;
                break;
            }
            previous = violation;
        }
        if (r.size() == 0 || out.violation >= tol::kWitnessAccept) {
            continue;
        }
        // Polish: with P fixed, make the r-equalities hard.
        Eigen::MatrixXd a;
        Eigen::VectorXd b;
        r_system(L, P, phi, spec, a, b);
        const Eigen::MatrixXd none(0, L.r_size());
        lp::LpProblem feas = lp::LpProblem::with_variables(L.r_size());
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            feas.add_row(a.row(i).transpose(), lp::RowSense::Equal, b(i));
        }
        const auto polished = lp::solve(feas);
        if (polished.status == lp::Status::Optimal) {
            r = polished.point;
        }
        JointWitness w = assemble(L, P, r);
        if (verify_witness(w, phi, spec).ok) {
            out.witness = std::move(w);
            out.restart = k;
            out.rounds = rounds;
            return out;
        }
    }
    return out;
}

std::optional<JointWitness> find_witness(const PhiVector& phi, const ProblemSpec& spec, int restarts,
                                         std::uint64_t seed) {
    return search_witness(phi, spec, restarts, seed).witness;
}

// ---- json ----

std::string witness_to_json(const JointWitness& w, const std::optional<PhiVector>& phi) {
    using nlohmann::json;
    json q = json::array();
    for (int y = 0; y < 2; ++y) {
        json qy = json::array();
        for (int k = 0; k < w.n_w; ++k) {
            json qw = json::array();
            for (int u = 0; u < w.d; ++u) {
                json qu = json::array();
                for (int x = 0; x < w.n_x; ++x) {
                    qu.push_back(w.at(y, k, u, x));
                }
                qw.push_back(qu);
            }
            qy.push_back(qw);
        }
        q.push_back(qy);
    }
    json P = json::array();
    for (int k = 0; k < w.n_w; ++k) {
        json row = json::array();
        for (int u = 0; u < w.d; ++u) {
            row.push_back(w.P(k, u));
        }
        P.push_back(row);
    }
    json out = {{"q", q}, {"P", P}};
    if (phi) {
        auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
        out["phi"] = {{"theta", vec(phi->theta)}, {"psi", vec(phi->psi)}, {"omega", vec(phi->omega)}};
    }
    return out.dump(2);
}

std::pair<JointWitness, std::optional<PhiVector>> witness_from_json(const std::string& text) {
    using nlohmann::json;
    try {
        const json j = json::parse(text);
        const auto& q = j.at("q");
        const auto& P = j.at("P");
        if (q.size() != 2 || q[0].empty() || q[0][0].empty() || q[0][0][0].empty()) {
            throw ParseError("witness q must be shaped [2][w][u][x]");
        }
        const int nw = static_cast<int>(q[0].size());
        const int d = static_cast<int>(q[0][0].size());
        const int nx = static_cast<int>(q[0][0][0].size());
        JointWitness w = JointWitness::zeros(nw, d, nx);
        for (int y = 0; y < 2; ++y) {
            if (static_cast<int>(q[y].size()) != nw) {
                throw ParseError("ragged witness tensor");
            }
            for (int k = 0; k < nw; ++k) {
                if (static_cast<int>(q[y][k].size()) != d) {
                    throw ParseError("ragged witness tensor");
                }
                for (int u = 0; u < d; ++u) {
                    if (static_cast<int>(q[y][k][u].size()) != nx) {
                        throw ParseError("ragged witness tensor");
                    }
                    for (int x = 0; x < nx; ++x) {
                        w.at(y, k, u, x) = q[y][k][u][x].get<double>();
                    }
                }
            }
        }
        if (static_cast<int>(P.size()) != nw) {
            throw ParseError("witness P must be shaped [w][u]");
        }
        for (int k = 0; k < nw; ++k) {
            if (static_cast<int>(P[k].size()) != d) {
                throw ParseError("witness P must be shaped [w][u]");
            }
            for (int u = 0; u < d; ++u) {
                w.P(k, u) = P[k][u].get<double>();
            }
        }
        std::optional<PhiVector> phi;
        if (j.contains("phi")) {
            auto vec = [](const json& a) {
                const auto v = a.get<std::vector<double>>();
                return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
            };
            phi = PhiVector{vec(j["phi"].at("theta")), vec(j["phi"].at("psi")), vec(j["phi"].at("omega"))};
        }
        return {std::move(w), std::move(phi)};
    } catch (const json::exception& e) {
        throw ParseError(std::string("witness json: ") + e.what());
    }
}

std::pair<JointWitness, std::optional<PhiVector>> load_witness_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return witness_from_json(ss.str());
}

} // namespace pisfp
