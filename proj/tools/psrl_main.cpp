#include <iostream>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::cerr << "psrl: not wired up yet\n";
  return 1;
}
