#include "cli.hpp"

int main(int argc, char** argv) { return suspvisc::cli::run(argc, argv); }
