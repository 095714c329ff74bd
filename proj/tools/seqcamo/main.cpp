#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return seqcamo::cli::run(argc, argv, std::cout, std::cerr);
}
