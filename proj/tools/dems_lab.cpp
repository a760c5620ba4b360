#include <iostream>

#include "dems/cli.hpp"

int main(int argc, char** argv) {
    return dems::dispatch(argc, argv, std::cout, std::cerr);
}
