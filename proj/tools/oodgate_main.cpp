#include "cli/commands.hpp"

int main(int argc, char** argv) { return oodgate::cli::run(argc, argv); }
