#include "fracsing/cli.hpp"

int main(int argc, char** argv) { return fracsing::run_command({argv, argv + argc}); }
