#include "renal/cli.hpp"

int main(int argc, char** argv) { return renal::cli::run(argc, argv); }
