#include "imgrid/runner.hpp"

int main(int argc, char** argv) { return imgrid::runner::cli_main(argc, argv); }
