// Placeholder; filled in once the pipeline benchmarks are in.
#include <cstdio>
int main() {
  std::puts("acceptance suite not yet implemented");
  return 1;
}
