#include "snn/cli/cli.hpp"

int main(int argc, char** argv) { return snn::cli::run(argc, argv); }
