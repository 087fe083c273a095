#include "surfsig/cli_io.hpp"

int main(int argc, char** argv) { return surfsig::run_command(argc, argv); }
