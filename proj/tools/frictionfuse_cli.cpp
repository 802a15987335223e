#include "frictionfuse/cli.hpp"

int main(int argc, char** argv) { return frictionfuse::cli::main(argc, argv); }
