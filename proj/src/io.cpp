#include "pisfp/io.hpp"

#include "pisfp/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pisfp {

std::string format_double(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

constexpr const char* kTraceHeader =
    "iter,selected_node_id,node_bound,best_bound,incumbent,L_n,geometric_factor,certified_error,open_nodes";

double parse_double(const std::string& s) {
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw ParseError("bad number in trace: " + s);
    }
    return v;
}

} // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace) {
        out << r.iter << ',' << r.selected_node_id << ',' << format_double(r.node_bound) << ','
            << format_double(r.best_bound) << ',' << format_double(r.incumbent) << ',' << r.L_n << ','
            << format_double(r.geometric_factor) << ',' << format_double(r.certified_error) << ',' << r.open_nodes
            << '\n';
    }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) {
        throw ParseError("trace csv: missing or unexpected header");
    }
    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 9) {
            throw ParseError("trace csv: expected 9 fields, got " + std::to_string(f.size()));
        }
        try {
            TraceRow r;
            r.iter = std::stoi(f[0]);
            r.selected_node_id = std::stoll(f[1]);
            r.node_bound = parse_double(f[2]);
            r.best_bound = parse_double(f[3]);
            r.incumbent = parse_double(f[4]);
            r.L_n = std::stoi(f[5]);
            r.geometric_factor = parse_double(f[6]);
            r.certified_error = parse_double(f[7]);
            r.open_nodes = static_cast<size_t>(std::stoull(f[8]));
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw ParseError("trace csv: malformed row: " + line);
        }
    }
    return rows;
}

std::string result_to_json(const BoundResult& r, const RunRecord& config) {
    using nlohmann::json;
    auto num = [](double v) -> json {
        if (std::isfinite(v)) {
            return v;
        }
        return format_double(v);
    };
    json j;
    j["config"] = {{"subcommand", config.subcommand},
                   {"input", config.input},
                   {"seed", config.seed},
                   {"direction", to_string(config.options.direction)},
                   {"tol_delta", config.options.tol_delta},
                   {"max_iter", config.options.max_iter},
                   {"prune", config.options.prune},
                   {"threads", config.options.threads}};
    j["direction"] = to_string(r.direction);
    j["bound"] = num(r.bound);
    j["geometric_factor"] = num(r.geometric_factor);
    j["certified_error"] = num(r.certified_error);
    j["A"] = num(r.A);
    j["s0_diameter"] = num(r.s0_diameter);
    j["iterations"] = r.iterations;
    j["L_n"] = r.L_n;
    j["converged"] = r.converged;
    j["gap_closed"] = r.gap_closed;
    j["nodes_created"] = r.nodes_created;
    j["nodes_pruned"] = r.nodes_pruned;
    j["lp_fallbacks"] = r.lp_fallbacks;
    if (r.incumbent) {
        j["incumbent"] = num(*r.incumbent);
        json phis = json::array();
        for (const auto& p : r.incumbent_phi) {
            auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
            phis.push_back({{"theta", vec(p.theta)}, {"psi", vec(p.psi)}, {"omega", vec(p.omega)}});
        }
        j["incumbent_phi"] = phis;
    } else {
        j["incumbent"] = nullptr;
    }
    return j.dump(2);
}

} // namespace pisfp
