#include "lfpsqp/cli.hpp"

int main(int argc, char** argv) { return lfpsqp::cli::run(argc, argv); }
