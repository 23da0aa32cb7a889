#include <iostream>
#include <string>
#include <vector>

#include "grtm/cli.hpp"

int main(int argc, char** argv)
{
    return grtm::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
