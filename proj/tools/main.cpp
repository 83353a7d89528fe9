#include "hybridgp/cli.hpp"

int main(int argc, char** argv) { return hybridgp::run_cli(argc, argv); }
