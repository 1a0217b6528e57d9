#include "fbmlab/cli.hpp"

int main(int argc, char** argv) { return fbmlab::cli_main(argc, argv); }
