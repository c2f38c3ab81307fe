#include "ecc/cli/cli.hpp"

int main(int argc, char** argv) { return ecc::cli::run(argc, argv); }
