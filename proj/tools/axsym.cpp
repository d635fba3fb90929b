#include "axsym/cli.hpp"

int main(int argc, char** argv) { return axsym::run_cli(argc, argv); }
