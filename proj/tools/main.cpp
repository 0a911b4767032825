#include "clinli/cli/cli.hpp"

int main(int argc, char** argv) { return clinli::cli::main(argc, argv); }
