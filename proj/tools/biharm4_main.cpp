#include "biharm4/cli.h"

int main(int argc, char** argv) { return biharm4::run_cli(argc, argv); }
