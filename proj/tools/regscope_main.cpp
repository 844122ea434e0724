#include "regscope/cli.hpp"

int main(int argc, char** argv) { return regscope::cli::run(argc, argv); }
