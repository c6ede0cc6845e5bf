#include <cstdio>

int main() {
  std::printf("waypointrl: placeholder\n");
  return 0;
}
