#include <iostream>

#include "courtformer/cli/app.hpp"

int main(int argc, char** argv) { return courtformer::cli::run(argc, argv, std::cout, std::cerr); }
