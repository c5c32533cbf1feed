#include "conjsim/cli.hpp"

int main(int argc, char** argv) { return conjsim::cli::main(argc, argv); }
