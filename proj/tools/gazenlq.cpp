#include "gazenlq/cli/commands.hpp"

int main(int argc, char** argv) { return gazenlq::cli::run(argc, argv); }
