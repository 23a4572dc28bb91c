#include "trajkit/commands.hpp"

int main(int argc, char** argv) { return trajkit::run_cli(argc, argv); }
