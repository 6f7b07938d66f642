#include <iostream>

int main() {
  std::cout << "difflab: subcommands pending\n";
  return 0;
}
