#include "doi/cli.hpp"

int main(int argc, char** argv) { return doi::cli::run_cli(argc, argv); }
