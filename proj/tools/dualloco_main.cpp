#include "dualloco/cli.hpp"

int main(int argc, char** argv) { return dualloco::run_cli(argc, argv); }
