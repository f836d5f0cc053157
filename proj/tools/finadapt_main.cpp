#include "finadapt/cli.hpp"

int main(int argc, char** argv) { return finadapt::cli::run(argc, argv); }
