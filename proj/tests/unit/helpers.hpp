#pragma once

#include "pisfp/model.hpp"

#include <string>

inline std::string data_path(const std::string& name) { return std::string(PISFP_TEST_DATA) + "/" + name; }

inline pisfp::ProblemSpec eps_instance(int tenths) {
    return pisfp::load_problem_file(data_path("eps0" + std::to_string(tenths) + ".json"));
}
