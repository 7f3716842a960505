#include "fluororeg/cli.hpp"

int main(int argc, char** argv) { return fluororeg::cli_main(argc, argv); }
