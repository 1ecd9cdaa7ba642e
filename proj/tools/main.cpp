#include "cli.hpp"

int main(int argc, char** argv) { return wavesrc::cli::run_cli(argc, argv); }
