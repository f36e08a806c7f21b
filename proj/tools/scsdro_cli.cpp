#include "scsdro/harness.hpp"

int main(int argc, char** argv) { return scsdro::run_cli(argc, argv); }
