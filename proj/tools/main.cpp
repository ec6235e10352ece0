#include "cli.hpp"

#include <csignal>
#include <iostream>

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  return bridge::cli::run(argc, argv, {std::cin, std::cout, std::cerr});
}
