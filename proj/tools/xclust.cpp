#include "xclust/cli.hpp"

int main(int argc, char** argv) { return xclust::cli::main_entry(argc, argv); }
