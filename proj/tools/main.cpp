#include "trialmix/cli.hpp"

int main(int argc, char** argv) { return trialmix::cli::run(argc, argv); }
