#include "hetcorr/cli.hpp"

int main(int argc, char** argv) { return hetcorr::cli::cli_main(argc, argv); }
