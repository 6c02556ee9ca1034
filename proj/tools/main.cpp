#include "kpforge/cli.hpp"

int main(int argc, char** argv) { return kpforge::cli::run(argc, argv); }
