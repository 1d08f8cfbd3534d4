// Timing comparison of the parallel matrix product against the serial
// reference it must agree with bitwise.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "local/linalg.hpp"

using namespace local;

namespace {

Matrix random_matrix(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix m(n, n);
  for (double& v : m.data) v = unif(rng);
  return m;
}

double time_seconds(const std::function<void()>& f, int reps) {
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count() / reps;
}

}  // namespace

int main() {
  std::mt19937_64 rng(1);
  std::printf("%6s %6s %12s %12s %8s %8s\n", "n", "reps", "serial_s", "parallel_s", "speedup",
              "match");
  for (int n : {64, 128, 256, 512, 1024}) {
    Matrix a = random_matrix(rng, n);
    Matrix b = random_matrix(rng, n);
    int reps = std::max(1, 268435456 / (n * n * n));

    Matrix ref = matmul_serial(a, b);
    Matrix par = matmul(a, b);
    bool match = ref.data == par.data;

    double ts = time_seconds([&] { Matrix c = matmul_serial(a, b); (void)c; }, reps);
    double tp = time_seconds([&] { Matrix c = matmul(a, b); (void)c; }, reps);
    std::printf("%6d %6d %12.6f %12.6f %8.2f %8s\n", n, reps, ts, tp, ts / tp,
                match ? "yes" : "NO");
  }
  return 0;
}
