#include "leangate/commands.hpp"

int main(int argc, char** argv) { return leangate::cli::run(argc, argv); }
