#include "novas/cli.hpp"

int main(int argc, char** argv) { return novas::cli::run(argc, argv); }
