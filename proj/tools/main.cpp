#include "cli.hpp"

int main(int argc, char **argv) { return treeharmonic::cli::main_entry(argc, argv); }
