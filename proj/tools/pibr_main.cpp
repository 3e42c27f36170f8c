#include "pibr/harness.hpp"

int main(int argc, char** argv) { return pibr::harness::run_cli(argc, argv); }
