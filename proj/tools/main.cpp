#include "ncpoly_cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    const auto parsed = ncpoly::cli::parse_config(argc, argv);
    if (!parsed.config) {
        (parsed.exit_code == 0 ? std::cout : std::cerr) << parsed.message << '\n';
        return parsed.exit_code;
    }
    return ncpoly::cli::run(*parsed.config, std::cout, std::cerr);
}
