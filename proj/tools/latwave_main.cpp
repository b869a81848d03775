#include <latwave/cli.hpp>

int main(int argc, char** argv) { return latwave::run_cli(argc, argv); }
