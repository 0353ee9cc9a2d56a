#include "commands.hpp"

int main(int argc, char** argv) { return gatr::cli::run(argc, argv); }
