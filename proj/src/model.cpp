#include "pisfp/model.hpp"

#include "pisfp/config.hpp"
#include "pisfp/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace pisfp {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

double sum_over_w(const ObservedDistribution& o, int y, int x) {
    double s = 0.0;
    for (int w = 0; w < o.n_w; ++w) {
        s += o.at(y, w, x);
    }
    return s;
}

} // namespace

// ---- derived marginals ----

double ProblemSpec::f_yx() const { return sum_over_w(observed, 0, target_x); }

double ProblemSpec::f_x() const {
    double s = 0.0;
    for (int y = 0; y < observed.n_y; ++y) {
        s += sum_over_w(observed, y, target_x);
    }
    return s;
}

double ProblemSpec::f_not_x() const {
    double s = 0.0;
    for (int y = 0; y < observed.n_y; ++y) {
        for (int x = 0; x < n_x; ++x) {
            if (x != target_x) {
                s += sum_over_w(observed, y, x);
            }
        }
    }
    return s;
}

Eigen::VectorXd ProblemSpec::f_y_w_x() const {
    Eigen::VectorXd v(n_w);
    for (int w = 0; w < n_w; ++w) {
        v(w) = observed.at(0, w, target_x);
    }
    return v;
}

Eigen::VectorXd ProblemSpec::f_w_x() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_w);
    for (int y = 0; y < observed.n_y; ++y) {
        for (int w = 0; w < n_w; ++w) {
            v(w) += observed.at(y, w, target_x);
        }
    }
    return v;
}

Eigen::VectorXd ProblemSpec::f_w_not_x() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_w);
    for (int y = 0; y < observed.n_y; ++y) {
        for (int w = 0; w < n_w; ++w) {
            for (int x = 0; x < n_x; ++x) {
                if (x != target_x) {
                    v(w) += observed.at(y, w, x);
                }
            }
        }
    }
    return v;
}

Eigen::VectorXd PhiVector::stacked() const {
    Eigen::VectorXd v(3 * theta.size());
    v << theta, psi, omega;
    return v;
}

PhiVector PhiVector::from_stacked(const Eigen::VectorXd& v) {
    const Eigen::Index d = v.size() / 3;
    return PhiVector{v.segment(0, d), v.segment(d, d), v.segment(2 * d, d)};
}

double BlockData::objective(const PhiVector& phi) const {
    double s = offset;
    for (int i = 0; i < phi.d(); ++i) {
        if (phi.psi(i) < psi_min - tol::kFeasibility) {
            throw DomainError("psi[" + std::to_string(i) + "] = " + fmt(phi.psi(i)) + " below psi_min");
        }
        s += phi.theta(i) * phi.omega(i) / phi.psi(i);
    }
    return s;
}

// ---- constraint systems ----

double LinearConstraintSystem::max_violation(const Eigen::VectorXd& x) const {
    lp::LpProblem p;
    p.objective = Eigen::VectorXd::Zero(x.size());
    p.rows = rows;
    p.senses = senses;
    p.rhs = rhs;
    p.lower = lower;
    p.upper = upper;
    return lp::max_violation(p, x);
}

bool LinearConstraintSystem::contains(const Eigen::VectorXd& x, double tolerance) const {
    return x.size() == num_variables() && max_violation(x) <= tolerance;
}

lp::LpProblem LinearConstraintSystem::as_lp(const Eigen::VectorXd& objective, lp::Direction direction) const {
    lp::LpProblem p;
    p.objective = objective;
    p.direction = direction;
    p.rows = rows;
    p.senses = senses;
    p.rhs = rhs;
    p.lower = lower;
    p.upper = upper;
    return p;
}

LinearConstraintSystem build_ir_block(const BlockData& b) {
    const int d = b.d();
    const Eigen::Index n_w = b.lower.rows();
    LinearConstraintSystem sys;
    const Eigen::Index m = 6 * n_w + 3;
    sys.rows = Eigen::MatrixXd::Zero(m, 3 * d);
    sys.rhs.resize(m);
    sys.senses.reserve(static_cast<size_t>(m));

    const Eigen::VectorXd* vecs[3] = {&b.v_theta, &b.v_psi, &b.v_omega};
    const char* names[3] = {"theta", "psi", "omega"};
    Eigen::Index r = 0;
    for (int blk = 0; blk < 3; ++blk) {
        for (Eigen::Index w = 0; w < n_w; ++w) {
            sys.rows.block(r, blk * d, 1, d) = b.lower.row(w);
            sys.rhs(r) = (*vecs[blk])(w);
            sys.senses.push_back(lp::RowSense::LessEqual);
            sys.labels.push_back(std::string("lower.") + names[blk] + "[" + std::to_string(w) + "]");
            ++r;
        }
        for (Eigen::Index w = 0; w < n_w; ++w) {
            sys.rows.block(r, blk * d, 1, d) = b.upper.row(w);
            sys.rhs(r) = (*vecs[blk])(w);
            sys.senses.push_back(lp::RowSense::GreaterEqual);
            sys.labels.push_back(std::string("upper.") + names[blk] + "[" + std::to_string(w) + "]");
            ++r;
        }
    }
    const double sums[3] = {b.sum_theta, b.sum_psi, b.sum_omega};
    for (int blk = 0; blk < 3; ++blk) {
        sys.rows.block(r, blk * d, 1, d).setOnes();
        sys.rhs(r) = sums[blk];
        sys.senses.push_back(lp::RowSense::Equal);
        sys.labels.push_back(std::string("sum.") + names[blk]);
        ++r;
    }

    sys.lower.resize(3 * d);
    sys.upper.resize(3 * d);
    sys.lower.segment(0, d).setZero();
    sys.upper.segment(0, d).setConstant(b.sum_theta);
    sys.lower.segment(d, d).setConstant(b.psi_min);
    sys.upper.segment(d, d).setConstant(b.sum_psi);
    sys.lower.segment(2 * d, d).setZero();
    sys.upper.segment(2 * d, d).setConstant(b.sum_omega);
    return sys;
}

BlockData event_block(const ProblemSpec& spec) {
    BlockData b;
    b.lower = spec.transition_bounds.lower;
    b.upper = spec.transition_bounds.upper;
    b.v_theta = spec.f_y_w_x();
    b.v_psi = spec.f_w_x();
    b.v_omega = spec.f_w_not_x();
    b.sum_theta = spec.f_yx();
    b.sum_psi = spec.f_x();
    b.sum_omega = spec.f_not_x();
    b.offset = b.sum_theta;
    b.psi_min = spec.psi_min;
    return b;
}

LinearConstraintSystem build_ir_phi(const ProblemSpec& spec) { return build_ir_block(event_block(spec)); }

// ---- validation ----

void validate(const ProblemSpec& s) {
    if (s.d < 1 || s.n_w < 1 || s.n_x < 2) {
        throw ValidationError("dims must satisfy u >= 1, w >= 1, x >= 2");
    }
    if (s.target_x < 0 || s.target_x >= s.n_x) {
        throw ValidationError("target_x " + std::to_string(s.target_x) + " out of range");
    }
    const auto& o = s.observed;
    if (o.n_w != s.n_w || o.n_x != s.n_x || o.n_y < 1 ||
        static_cast<int>(o.p.size()) != o.n_y * o.n_w * o.n_x) {
        throw ShapeMismatch("observed table shape does not match dims");
    }
    if (s.y_values) {
        if (static_cast<int>(s.y_values->size()) != o.n_y) {
            throw ShapeMismatch("y_values has " + std::to_string(s.y_values->size()) +
                                " entries but observed has " + std::to_string(o.n_y) + " outcome rows");
        }
        for (double y : *s.y_values) {
            if (!std::isfinite(y)) {
                throw ValidationError("y_values must be finite");
            }
        }
    } else if (o.n_y != 2) {
        throw ShapeMismatch("event mode needs exactly 2 outcome rows (target, complement)");
    }
    double mass = 0.0;
    for (int y = 0; y < o.n_y; ++y) {
        for (int w = 0; w < o.n_w; ++w) {
            for (int x = 0; x < o.n_x; ++x) {
                const double v = o.at(y, w, x);
                if (!std::isfinite(v) || v < 0.0) {
                    throw ValidationError("negative or non-finite probability at observed (" + std::to_string(y) +
                                          "," + std::to_string(w) + "," + std::to_string(x) + ")");
                }
                mass += v;
            }
        }
    }
    if (std::abs(mass - 1.0) > tol::kIngest) {
        throw ValidationError("mass " + fmt(mass) + " \xE2\x89\xA0 1");
    }

    const auto& lo = s.transition_bounds.lower;
    const auto& hi = s.transition_bounds.upper;
    if (lo.rows() != s.n_w || lo.cols() != s.d || hi.rows() != s.n_w || hi.cols() != s.d) {
        throw ShapeMismatch("transition bounds must be " + std::to_string(s.n_w) + " x " + std::to_string(s.d));
    }
    for (int w = 0; w < s.n_w; ++w) {
        for (int u = 0; u < s.d; ++u) {
            const std::string at = "(" + std::to_string(w) + "," + std::to_string(u) + ")";
            if (!std::isfinite(lo(w, u)) || !std::isfinite(hi(w, u))) {
                throw ValidationError("non-finite bound at " + at);
            }
            if (lo(w, u) > hi(w, u)) {
                throw ValidationError("lower > upper at " + at);
            }
            if (lo(w, u) < 0.0 || hi(w, u) > 1.0) {
                throw ValidationError("bound outside [0,1] at " + at);
            }
        }
    }
    for (int u = 0; u < s.d; ++u) {
        if (lo.col(u).sum() > 1.0 + tol::kIngest || hi.col(u).sum() < 1.0 - tol::kIngest) {
            throw ValidationError("no column-stochastic matrix fits the bounds in column " + std::to_string(u));
        }
    }

    const double fx = s.f_x();
    if (!(s.psi_min > 0.0)) {
        throw ValidationError("psi_min must be positive");
    }
    if (s.psi_min > fx / s.d + tol::kIngest) {
        throw ValidationError("psi_min " + fmt(s.psi_min) + " exceeds f(X=x)/d = " + fmt(fx / s.d));
    }
    if (s.weights_pi && static_cast<int>(s.weights_pi->size()) != s.n_x) {
        throw ShapeMismatch("weights_pi needs one entry per treatment value");
    }
}

// ---- JSON ----

namespace {

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ParseError(std::string(what) + " must be a non-empty 2-d array");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
            throw ShapeMismatch(std::string(what) + " is ragged at row " + std::to_string(r));
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

json matrix_to(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        out.push_back(row);
    }
    return out;
}

} // namespace

ProblemSpec load_problem(std::istream& source) {
    json j;
    try {
        j = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    ProblemSpec s;
    try {
        const auto& dims = j.at("dims");
        s.d = dims.at("u").get<int>();
        s.n_w = dims.at("w").get<int>();
        s.n_x = dims.at("x").get<int>();
        s.target_x = j.at("target_x").get<int>();

        const auto& p = j.at("observed").at("p");
        if (!p.is_array() || p.empty()) {
            throw ParseError("observed.p must be a 3-d array");
        }
        auto& o = s.observed;
        o.n_y = static_cast<int>(p.size());
        o.n_w = s.n_w;
        o.n_x = s.n_x;
        o.p.assign(static_cast<size_t>(o.n_y * o.n_w * o.n_x), 0.0);
        for (int y = 0; y < o.n_y; ++y) {
            if (!p[y].is_array() || static_cast<int>(p[y].size()) != s.n_w) {
                throw ShapeMismatch("observed.p[" + std::to_string(y) + "] must have " + std::to_string(s.n_w) + " rows");
            }
            for (int w = 0; w < s.n_w; ++w) {
                if (!p[y][w].is_array() || static_cast<int>(p[y][w].size()) != s.n_x) {
                    throw ShapeMismatch("observed.p[" + std::to_string(y) + "][" + std::to_string(w) + "] must have " +
                                        std::to_string(s.n_x) + " entries");
                }
                for (int x = 0; x < s.n_x; ++x) {
                    o.at(y, w, x) = p[y][w][x].get<double>();
                }
            }
        }
        s.transition_bounds.lower = matrix_from(j.at("transition_bounds").at("lower"), "transition_bounds.lower");
        s.transition_bounds.upper = matrix_from(j.at("transition_bounds").at("upper"), "transition_bounds.upper");
        s.psi_min = j.value("psi_min", defaults::kPsiMin);
        if (j.contains("y_values") && !j["y_values"].is_null()) {
            s.y_values = j["y_values"].get<std::vector<double>>();
        }
        if (j.contains("weights_pi") && !j["weights_pi"].is_null()) {
            s.weights_pi = j["weights_pi"].get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad problem field: ") + e.what());
    }
    validate(s);
    return s;
}

ProblemSpec load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path);
    }
    return load_problem(in);
}

std::string problem_to_json(const ProblemSpec& s) {
    json j;
    j["dims"] = {{"u", s.d}, {"w", s.n_w}, {"x", s.n_x}};
    j["target_x"] = s.target_x;
    json p = json::array();
    for (int y = 0; y < s.observed.n_y; ++y) {
        json rows = json::array();
        for (int w = 0; w < s.n_w; ++w) {
            json row = json::array();
            for (int x = 0; x < s.n_x; ++x) {
                row.push_back(s.observed.at(y, w, x));
            }
            rows.push_back(row);
        }
        p.push_back(rows);
    }
    j["observed"] = {{"p", p}};
    j["transition_bounds"] = {{"lower", matrix_to(s.transition_bounds.lower)},
                              {"upper", matrix_to(s.transition_bounds.upper)}};
    j["psi_min"] = s.psi_min;
    if (s.y_values) {
        j["y_values"] = *s.y_values;
    }
    if (s.weights_pi) {
        j["weights_pi"] = *s.weights_pi;
    }
    return j.dump(2);
}

// ---- exact identification ----

ExactIdentification identify_exact(const ProblemSpec& spec) {
    const auto& lo = spec.transition_bounds.lower;
    const auto& hi = spec.transition_bounds.upper;
    if (spec.n_w != spec.d) {
        throw NotInvertible("transition matrix is not square");
    }
    if ((hi - lo).cwiseAbs().maxCoeff() > tol::kIngest) {
        throw ValidationError("transition matrix is not point-identified (lower != upper)");
    }
    const Eigen::MatrixXd P = 0.5 * (lo + hi);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0 || sv(0) / smin > tol::kConditionCap) {
        throw NotInvertible("transition matrix is singular or ill-conditioned");
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(P);
    ExactIdentification out;
    out.phi.theta = lu.solve(spec.f_y_w_x());
    out.phi.psi = lu.solve(spec.f_w_x());
    out.phi.omega = lu.solve(spec.f_w_not_x());
    for (const Eigen::VectorXd* v : {&out.phi.theta, &out.phi.psi, &out.phi.omega}) {
        if (v->minCoeff() < -tol::kNegativeRecovery) {
            throw NegativeRecovery("recovered probability " + fmt(v->minCoeff()) + " is negative");
        }
    }
    if (out.phi.psi.minCoeff() <= 0.0) {
        throw NegativeRecovery("recovered f(u, X=x) is zero");
    }
    out.value = spec.f_yx();
    for (int i = 0; i < spec.d; ++i) {
        out.value += out.phi.theta(i) * out.phi.omega(i) / out.phi.psi(i);
    }
    return out;
}

// ---- forward simulation ----

Simulation simulate_forward(std::uint64_t seed, int d, int n_w, int n_x, double widening) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mass(0.5, 1.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Simulation sim;
    const int n_y = 2;
    sim.joint.assign(static_cast<size_t>(n_y * d * n_x), 0.0);
    double total = 0.0;
    for (auto& v : sim.joint) {
        v = mass(rng);
        total += v;
    }
    for (auto& v : sim.joint) {
        v /= total;
    }
    auto joint = [&](int y, int u, int x) { return sim.joint[static_cast<size_t>((y * d + u) * n_x + x)]; };

    // Diagonally dominant columns keep the square case well conditioned.
    Eigen::MatrixXd P(n_w, d);
    for (int u = 0; u < d; ++u) {
        for (int w = 0; w < n_w; ++w) {
            P(w, u) = unit(rng) + (w == u ? 2.0 : 0.0);
        }
        P.col(u) /= P.col(u).sum();
    }
    sim.transition = P;

    ProblemSpec& s = sim.spec;
    s.d = d;
    s.n_w = n_w;
    s.n_x = n_x;
    s.target_x = n_x - 1;
    s.observed.n_y = n_y;
    s.observed.n_w = n_w;
    s.observed.n_x = n_x;
    s.observed.p.assign(static_cast<size_t>(n_y * n_w * n_x), 0.0);
    for (int y = 0; y < n_y; ++y) {
        for (int w = 0; w < n_w; ++w) {
            for (int x = 0; x < n_x; ++x) {
                double v = 0.0;
                for (int u = 0; u < d; ++u) {
                    v += P(w, u) * joint(y, u, x);
                }
                s.observed.at(y, w, x) = v;
            }
        }
    }
    // Renormalize away round-off so the ingest check holds exactly.
    double obs_total = 0.0;
    for (double v : s.observed.p) {
        obs_total += v;
    }
    for (double& v : s.observed.p) {
        v /= obs_total;
    }

    s.transition_bounds.lower = (P.array() - widening).max(0.0).matrix();
    s.transition_bounds.upper = (P.array() + widening).min(1.0).matrix();
    if (widening == 0.0) {
        s.transition_bounds.upper = s.transition_bounds.lower;
    }

    double min_psi = 1.0;
    for (int u = 0; u < d; ++u) {
        min_psi = std::min(min_psi, joint(0, u, s.target_x) + joint(1, u, s.target_x));
    }
    s.psi_min = std::min(defaults::kPsiMin, 0.5 * min_psi);
    s.y_values = std::vector<double>{1.0, 0.0};
    std::vector<double> pi(static_cast<size_t>(n_x), 0.0);
    pi.back() = 1.0;
    pi.front() = -1.0;
    s.weights_pi = pi;

    // f(y | do(x)) = sum_u f(y,u,x) / f(u,x) * f(u)
    sim.mean_do.assign(static_cast<size_t>(n_x), 0.0);
    for (int x = 0; x < n_x; ++x) {
        double v = 0.0;
        for (int u = 0; u < d; ++u) {
            double f_u = 0.0;
            for (int y = 0; y < n_y; ++y) {
                for (int xx = 0; xx < n_x; ++xx) {
                    f_u += joint(y, u, xx);
                }
            }
            const double f_ux = joint(0, u, x) + joint(1, u, x);
            v += joint(0, u, x) / f_ux * f_u;
        }
        sim.mean_do[static_cast<size_t>(x)] = v;
    }
    sim.truth = sim.mean_do[static_cast<size_t>(s.target_x)];
    sim.ace_truth = 0.0;
    for (int x = 0; x < n_x; ++x) {
        sim.ace_truth += pi[static_cast<size_t>(x)] * sim.mean_do[static_cast<size_t>(x)];
    }
    return sim;
}

} // namespace pisfp
