#include "torqflow/cli.hpp"

int main(int argc, char** argv) { return torqflow::cli_main(argc, argv); }
