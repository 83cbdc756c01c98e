#include "cli.hpp"

int main(int argc, char** argv) { return hnsf::cli::run(argc, argv); }
