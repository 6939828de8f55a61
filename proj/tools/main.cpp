#include "cli.hpp"

int main(int argc, char** argv) { return reorder::cli::run_cli(argc, argv); }
