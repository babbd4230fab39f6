#include "cli.hpp"

int main(int argc, char** argv) { return pressmap::cli::run(argc, argv); }
