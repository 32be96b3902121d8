#include "splitflow/cli.hpp"

int main(int argc, char** argv) { return splitflow::cli::run(argc, argv); }
