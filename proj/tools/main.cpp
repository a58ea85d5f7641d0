#include "shefk/cli.hpp"

int main(int argc, char** argv) { return shefk::cli::run(argc, argv); }
