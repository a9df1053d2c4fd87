#include "pisfp/cli.hpp"

int main(int argc, char** argv) { return pisfp::run_cli(argc, argv); }
