#include "rasmix/cli.hpp"

int main(int argc, char** argv) { return rasmix::run_cli(argc, argv); }
