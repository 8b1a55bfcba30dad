#include "lpca/cli.hpp"

int main(int argc, char** argv) { return lpca::cli::main_entry(argc, argv); }
