// Serial-vs-OpenMP kernel benchmark plus a model-level training-step timing.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include <omp.h>

#include "molt/kernels.hpp"
#include "molt/trainer.hpp"

using namespace molt;

namespace {

double time_matmul(int n, bool parallel, int reps) {
  Rng rng(1);
  Matrix a(n, n), b(n, n), out(n, n);
  for (size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = rng.next_gaussian();
    b.data()[i] = rng.next_gaussian();
  }
  if (parallel) kernels::omp::matmul_nn(a, b, out);  // warm-up
  else kernels::serial::matmul_nn(a, b, out);

  const double t0 = omp_get_wtime();
  for (int r = 0; r < reps; ++r) {
    if (parallel) kernels::omp::matmul_nn(a, b, out);
    else kernels::serial::matmul_nn(a, b, out);
  }
  return (omp_get_wtime() - t0) / reps;
}

double time_train_epoch(bool parallel, int reps) {
  auto& exec = kernels::exec_config();
  exec.parallel_enabled = parallel;

  SyntheticSpec spec;
  spec.num_samples = 32;
  spec.num_classes = 4;
  Dataset data = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.epochs = reps;
  Model model(cfg.model, data.info);
  AdamState state = AdamState::init(model.store());

  const double t0 = omp_get_wtime();
  train(model, data, cfg, state);
  return (omp_get_wtime() - t0) / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) threads = std::atoi(argv[++i]);
  }
  kernels::set_num_threads(threads);
  std::printf("threads: %d\n", kernels::max_threads());

  std::printf("\n%-18s %12s %12s %9s %14s\n", "kernel", "serial (ms)", "omp (ms)", "speedup", "serial GF/s");
  for (int n : {64, 128, 256, 512}) {
    const int reps = n <= 128 ? 50 : 8;
    const double ts = time_matmul(n, false, reps);
    const double tp = time_matmul(n, true, reps);
    const double gflops = 2.0 * n * n * n / ts * 1e-9;
    char label[32];
    std::snprintf(label, sizeof(label), "matmul_nn %d", n);
    std::printf("%-18s %12.3f %12.3f %8.2fx %14.2f\n", label, ts * 1e3, tp * 1e3, ts / tp, gflops);
  }

  std::printf("\ntraining step, batch 32 (full default model):\n");
  const double serial_step = time_train_epoch(false, 10);
  const double parallel_step = time_train_epoch(true, 10);
  std::printf("  serial kernels %10.2f ms\n", serial_step * 1e3);
  std::printf("  omp kernels    %10.2f ms   (%.2fx)\n", parallel_step * 1e3, serial_step / parallel_step);
  return 0;
}
