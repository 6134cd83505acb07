#include "ecmki/cli.hpp"

int main(int argc, char** argv) { return ecmki::cli_main(argc, argv); }
