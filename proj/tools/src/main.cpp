#include "diacdm/cli.hpp"

int main(int argc, char** argv) { return diacdm::cli::run(argc, argv); }
