#include "vtb/cli.hpp"

int main(int argc, char** argv) { return vtb::cli::run_cli(argc, argv); }
