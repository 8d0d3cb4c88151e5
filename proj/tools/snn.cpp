#include <exception>
#include <iostream>

#include "snn/cli.hpp"

int main(int argc, char** argv) {
    try {
        return snn::run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
