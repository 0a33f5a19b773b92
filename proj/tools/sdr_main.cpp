#include "sdr/cli.hpp"

int main(int argc, char** argv) { return sdr::run_cli(argc, argv); }
