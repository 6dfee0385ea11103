#include "tvnet/cli.hpp"

int main(int argc, char** argv) { return tvnet::cli_main(argc, argv); }
