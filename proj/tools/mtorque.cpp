#include <mtorque/cli.hpp>

#include <iostream>

int main(int argc, char **argv) { return mtorque::run_cli(argc, argv, std::cout, std::cerr); }
