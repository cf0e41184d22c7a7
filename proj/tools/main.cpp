#include "pgs/cli/cli.hpp"

int main(int argc, char **argv) { return pgs::cli::run(argc, argv); }
