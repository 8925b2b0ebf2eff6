#include <iostream>

#include "nestmine/cli.hpp"

int main(int argc, char **argv)
{
    std::ios::sync_with_stdio(false);
    return nestmine::run_cli({argv + 1, argv + argc}, std::cin, std::cout, std::cerr);
}
