#include <iostream>

#include "mts_cli/cli.hpp"

int main(int argc, char** argv) { return mts::cli::dispatch({argv, argv + argc}, std::cout, std::cerr); }
