#include "helpers.hpp"

#include "pisfp/cli.hpp"
#include "pisfp/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pisfp;
namespace fs = std::filesystem;

namespace {

struct Call {
    int code = -1;
    std::string out;
    std::string err;
};

Call cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    Call c;
    c.code = run_cli(args, out, err);
    c.out = out.str();
    c.err = err.str();
    return c;
}

double field(const std::string& text, const std::string& key) {
    const auto at = text.find(key + "=");
    REQUIRE(at != std::string::npos);
    return std::stod(text.substr(at + key.size() + 1));
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "pisfp_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("cli: exit codes") {
    CHECK(cli({"validate", "--input", data_path("eps04.json")}).code == 0);
    const auto broken = cli({"validate", "--input", data_path("broken_order.json")});
    CHECK(broken.code == 1);
    CHECK(broken.err.find("lower > upper at (0,0)") != std::string::npos);
    CHECK(cli({"validate", "--input", "/nonexistent.json"}).code == 1);
    CHECK(cli({"bound", "--input", data_path("eps04.json"), "--delta", "-1"}).code == 1);
    CHECK(cli({"bound", "--input", data_path("eps04.json"), "--direction", "sideways"}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({}).code == 1);
    // grid too coarse to hit any feasible point
    auto empty = cli({"oracle", "--input", data_path("eps04.json"), "--grid", "0.3"});
    CHECK((empty.code == 0 || empty.code == 3));
}

TEST_CASE("cli: oracle output format") {
    const auto c = cli({"oracle", "--input", data_path("eps04.json"), "--grid", "1e-2"});
    REQUIRE(c.code == 0);
    CHECK(c.out.rfind("0.200 \xC2\xB1 2e-2", 0) == 0);
}

TEST_CASE("cli: bound writes a trace that parses back") {
    const auto trace = scratch("t.csv");
    const auto output = scratch("r.json");
    const auto c = cli({"bound", "--input", data_path("eps04.json"), "--max-iter", "50", "--trace", trace.string(),
                        "--output", output.string(), "--seed", "7"});
    REQUIRE(c.code == 0);
    CHECK(field(c.out, "bound") == doctest::Approx(0.2).epsilon(1e-2));
    std::ifstream in(trace);
    const auto rows = read_trace_csv(in);
    CHECK(rows.size() == static_cast<size_t>(field(c.out, "iterations")));
    for (size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].best_bound >= rows[i - 1].best_bound);
    }
    CHECK(rows.back().best_bound == field(c.out, "bound"));
    std::ifstream js(output);
    const auto j = nlohmann::json::parse(js);
    CHECK(j["config"]["seed"] == 7);
    CHECK(j["config"]["max_iter"] == 50);
}

TEST_CASE("cli: simulate then bound brackets the emitted truth") {
    for (int seed = 0; seed < 20; ++seed) {
        const auto prob = scratch("sim" + std::to_string(seed) + ".json");
        const auto s = cli({"simulate", "--seed", std::to_string(seed), "--output", prob.string()});
        REQUIRE(s.code == 0);
        std::ifstream tf(prob.string() + ".truth.json");
        const double truth = nlohmann::json::parse(tf)["truth"].get<double>();
        const auto lo = cli({"bound", "--input", prob.string(), "--max-iter", "30"});
        const auto hi = cli({"bound", "--input", prob.string(), "--max-iter", "30", "--direction", "upper"});
        REQUIRE(lo.code == 0);
        REQUIRE(hi.code == 0);
        CHECK(field(lo.out, "bound") <= truth + 1e-9);
        CHECK(field(hi.out, "bound") >= truth - 1e-9);
    }
}

TEST_CASE("cli: tightness on a stored optimizer") {
    const auto c = cli({"check-tightness", "--input", data_path("witness_problem_eps04.json")});
    REQUIRE(c.code == 0);
    CHECK(c.out.find("tightness=tight-certified") != std::string::npos);
}

TEST_CASE("cli: ace needs outcome values") {
    CHECK(cli({"ace", "--input", data_path("eps04.json")}).code == 1);
    const auto c = cli({"ace", "--input", data_path("eps04_ace.json"), "--max-iter", "20"});
    CHECK(c.code == 0);
}
