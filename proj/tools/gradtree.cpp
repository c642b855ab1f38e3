#include "cli.hpp"

int main(int argc, char** argv) { return gradtree::cli::run(argc, argv); }
