#include "spectralopt/cli.hpp"

int main(int argc, char** argv) { return spectralopt::cli::run(argc, argv); }
