#include <iostream>

#include "pairassoc/cli/app.hpp"

int main(int argc, char** argv) {
  return pairassoc::cli::run(argc, argv, std::cout, std::cerr);
}
