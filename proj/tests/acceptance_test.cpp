// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include <cstdio>

int main() {
  std::printf("acceptance suite placeholder\n");
  return 1;
}
