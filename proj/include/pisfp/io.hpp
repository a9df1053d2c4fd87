#pragma once

#include "pisfp/engine.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pisfp {

// %.17g, so values read back bit-identical.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);
std::vector<TraceRow> read_trace_csv(std::istream& in);

// Result plus the configuration that produced it.
struct RunRecord {
    std::string subcommand;
    std::string input;
    std::uint64_t seed = 0;
    RunOptions options;
};

std::string result_to_json(const BoundResult& r, const RunRecord& config);

} // namespace pisfp
