#include "abst/cli.hpp"

int main(int argc, char** argv) { return abst::cli_run(argc, argv); }
