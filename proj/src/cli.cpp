#include "pisfp/cli.hpp"

#include "pisfp/ace.hpp"
#include "pisfp/engine.hpp"
#include "pisfp/errors.hpp"
#include "pisfp/io.hpp"
#include "pisfp/model.hpp"
#include "pisfp/tightness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pisfp {

namespace {

enum Exit { kOk = 0, kInvalid = 1, kNumerical = 2, kEmpty = 3 };

struct Flags {
    std::string input;
    std::string direction = "lower";
    double delta = 1e-3;
    int max_iter = defaults::kMaxIter;
    std::string trace;
    std::string output;
    std::uint64_t seed = 0;
    bool no_prune = false;
    double grid = 1e-3;
    int threads = 1;
};

// simulate has no shape flags; it always draws this configuration.
constexpr int kSimD = 2;
constexpr int kSimW = 2;
constexpr int kSimX = 2;
constexpr double kSimWidening = 0.1;

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) {
        throw ValidationError("cannot write " + path);
    }
    f << text;
    if (text.empty() || text.back() != '\n') {
        f << '\n';
    }
}

RunOptions options_from(const Flags& f) {
    RunOptions o;
    o.direction = f.direction == "upper" ? BoundDirection::Upper : BoundDirection::Lower;
    o.tol_delta = f.delta;
    o.max_iter = f.max_iter;
    o.prune = !f.no_prune;
    o.threads = f.threads;
    return o;
}

void report(std::ostream& out, const BoundResult& r) {
    out << "bound=" << format_double(r.bound) << '\n'
        << "certified_error=" << format_double(r.certified_error) << '\n'
        << "geometric_factor=" << format_double(r.geometric_factor) << '\n'
        << "L_n=" << r.L_n << '\n'
        << "iterations=" << r.iterations << '\n'
        << "converged=" << (r.converged ? "true" : "false") << '\n'
        << "gap_closed=" << (r.gap_closed ? "true" : "false") << '\n';
    if (r.incumbent) {
        out << "incumbent=" << format_double(*r.incumbent) << '\n';
    }
}

void emit(const Flags& f, const std::string& sub, const BoundResult& r) {
    if (!f.trace.empty()) {
        std::ofstream t(f.trace);
        if (!t) {
            throw ValidationError("cannot write " + f.trace);
        }
        write_trace_csv(t, r.trace);
    }
    if (!f.output.empty()) {
        write_file(f.output, result_to_json(r, RunRecord{sub, f.input, f.seed, options_from(f)}));
    }
}

std::string short_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// 2e-3 rather than printf's 2e-03.
std::string short_exponent(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.0e", v);
    std::string s = buf;
    const auto e = s.find('e');
    if (e == std::string::npos) {
        return s;
    }
    std::string mant = s.substr(0, e);
    std::string ex = s.substr(e + 1);
    std::string sign;
    if (!ex.empty() && (ex[0] == '-' || ex[0] == '+')) {
        sign = ex[0] == '-' ? "-" : "";
        ex = ex.substr(1);
    }
    const auto nz = ex.find_first_not_of('0');
    ex = nz == std::string::npos ? "0" : ex.substr(nz);
    return mant + "e" + sign + ex;
}

std::optional<PhiVector> phi_from_input(const std::string& path) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.contains("phi")) {
        return std::nullopt;
    }
    try {
        auto vec = [](const nlohmann::json& a) {
            const auto v = a.get<std::vector<double>>();
            return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
        };
        return PhiVector{vec(j["phi"].at("theta")), vec(j["phi"].at("psi")), vec(j["phi"].at("omega"))};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("phi: ") + e.what());
    }
}

int cmd_bound(const Flags& f, std::ostream& out) {
    const ProblemSpec spec = load_problem_file(f.input);
    const BoundResult r = run(spec, options_from(f));
    report(out, r);
    emit(f, "bound", r);
    return kOk;
}

int cmd_ace(const Flags& f, std::ostream& out) {
    const ProblemSpec spec = load_problem_file(f.input);
    if (!spec.y_values) {
        throw MissingOutcomeValues("ACE needs y_values in the problem file");
    }
    if (!spec.weights_pi) {
        throw ValidationError("ACE needs weights_pi in the problem file");
    }
    const BoundResult r = bound_ace(spec, *spec.weights_pi, options_from(f));
    report(out, r);
    emit(f, "ace", r);
    return kOk;
}

int cmd_oracle(const Flags& f, std::ostream& out) {
    const ProblemSpec spec = load_problem_file(f.input);
    const double v = f.direction == "upper" ? brute_force_max(spec, f.grid, f.threads)
                                            : brute_force_min(spec, f.grid, f.threads);
    if (!std::isfinite(v)) {
        throw EmptyFeasibleRegion("no grid point is feasible");
    }
    out << short_value(v) << " \xC2\xB1 " << short_exponent(2.0 * f.grid) << '\n' << "oracle=" << format_double(v) << '\n';
    if (!f.output.empty()) {
        nlohmann::json j = {{"config", {{"subcommand", "oracle"}, {"input", f.input}, {"seed", f.seed},
                                        {"direction", f.direction}, {"grid", f.grid}, {"threads", f.threads}}},
                            {"value", v}, {"resolution", 2.0 * f.grid}};
        write_file(f.output, j.dump(2));
    }
    return kOk;
}

int cmd_tightness(const Flags& f, std::ostream& out) {
    const ProblemSpec spec = load_problem_file(f.input);
    std::optional<PhiVector> phi = phi_from_input(f.input);
    std::optional<BoundResult> bound;
    if (!phi) {
        RunOptions o = options_from(f);
        o.direction = BoundDirection::Lower;
        bound = run(spec, o);
        if (bound->incumbent_phi.empty()) {
            out << "tightness=unknown (no feasible optimizer found)\n";
            return kOk;
        }
        phi = bound->incumbent_phi.front();
        report(out, *bound);
    }
    const WitnessSearch s = search_witness(*phi, spec, defaults::kWitnessRestarts, f.seed);
    if (s.witness) {
        out << "tightness=tight-certified\n"
            << "restart=" << s.restart << '\n';
        if (!f.output.empty()) {
            write_file(f.output, witness_to_json(*s.witness, phi));
        }
    } else {
        out << "tightness=unknown\n"
            << "best_violation=" << format_double(s.violation) << '\n';
    }
    return kOk;
}

int cmd_validate(const Flags& f, std::ostream& out) {
    const ProblemSpec spec = load_problem_file(f.input);
    out << "valid: d=" << spec.d << " n_w=" << spec.n_w << " n_x=" << spec.n_x << " target_x=" << spec.target_x;
    if (spec.observed.n_y == 2) {
        out << " f(y,X=x)=" << format_double(spec.f_yx());
    }
    out << '\n';
    return kOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    if (f.output.empty()) {
        throw ValidationError("simulate needs --output");
    }
    const Simulation sim = simulate_forward(f.seed, kSimD, kSimW, kSimX, kSimWidening);
    write_file(f.output, problem_to_json(sim.spec));
    nlohmann::json truth = {{"seed", f.seed},
                            {"d", kSimD},
                            {"n_w", kSimW},
                            {"n_x", kSimX},
                            {"widening", kSimWidening},
                            {"truth", sim.truth},
                            {"mean_do", sim.mean_do},
                            {"ace_truth", sim.ace_truth}};
    write_file(f.output + ".truth.json", truth.dump(2));
    out << "truth=" << format_double(sim.truth) << '\n' << "ace_truth=" << format_double(sim.ace_truth) << '\n';
    return kOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"bounds on interventional probabilities under partially known proxy transitions"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("--input", f.input, "problem JSON");
        if (needs_input) {
            in->required();
        }
        sub->add_option("--direction", f.direction, "lower or upper")->check(CLI::IsMember({"lower", "upper"}));
        sub->add_option("--delta", f.delta, "stop when the certified error is below this")
            ->check(CLI::PositiveNumber);
        sub->add_option("--max-iter", f.max_iter, "iteration cap")->check(CLI::Range(1, 1 << 30));
        sub->add_option("--trace", f.trace, "per-iteration CSV");
        sub->add_option("--output", f.output, "JSON output");
        sub->add_option("--seed", f.seed, "random seed");
        sub->add_flag("--no-prune", f.no_prune, "disable incumbent pruning");
        sub->add_option("--grid", f.grid, "oracle grid step")->check(CLI::PositiveNumber);
        sub->add_option("--threads", f.threads, "worker threads")->check(CLI::Range(1, 256));
    };
    auto* bound = app.add_subcommand("bound", "bound f(Y_x = y)");
    auto* ace = app.add_subcommand("ace", "bound the weighted average causal effect");
    auto* oracle = app.add_subcommand("oracle", "brute-force grid optimum (d <= 2)");
    auto* tight = app.add_subcommand("check-tightness", "search for a joint witness");
    auto* validate_cmd = app.add_subcommand("validate", "load and check a problem file");
    auto* simulate = app.add_subcommand("simulate", "draw a forward-simulated instance");
    for (auto* s : {bound, ace, oracle, tight, validate_cmd}) {
        add_common(s, true);
    }
    add_common(simulate, false);

    std::vector<const char*> argv;
    argv.push_back("pisfp");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }

    try {
        if (*bound) return cmd_bound(f, out);
        if (*ace) return cmd_ace(f, out);
        if (*oracle) return cmd_oracle(f, out);
        if (*tight) return cmd_tightness(f, out);
        if (*validate_cmd) return cmd_validate(f, out);
        if (*simulate) return cmd_simulate(f, out);
    } catch (const EmptyFeasibleRegion& e) {
        err << "empty feasible region: " << e.what() << '\n';
        return kEmpty;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kInvalid;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kInvalid;
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace pisfp
