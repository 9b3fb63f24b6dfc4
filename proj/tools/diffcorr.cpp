#include "diffcorr/cli.hpp"

int main(int argc, char** argv) { return diffcorr::cli::main(argc, argv); }
