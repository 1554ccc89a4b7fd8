// Serial vs OpenMP accumulation kernels and mask synthesis.
//
//   bench_kernels [height width samples threads]
//
// Prints wall time per variant and checks the two kernels agree bit for bit.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "colorsal/kernels.hpp"
#include "colorsal/maskgen.hpp"

using namespace colorsal;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* what, double serial, double parallel, bool identical) {
  std::printf("%-26s serial %8.2f ms   omp %8.2f ms   speedup %5.2fx   %s\n", what, serial * 1e3,
              parallel * 1e3, serial / parallel, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t h = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 224;
  const std::size_t w = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 224;
  const std::size_t n = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 256;
  const int threads = argc > 4 ? std::atoi(argv[4]) : omp_get_max_threads();
  const std::size_t px = h * w;
  std::printf("image %zux%zu, %zu samples, %d threads\n", h, w, n, threads);

  RunConfig cfg;
  cfg.colors = default_palette();
  cfg.num_masks = n;
  const std::size_t k = cfg.colors.size();
  const MaskGenerator gen(cfg, h, w);

  // Mask synthesis: one sample per iteration, serial vs parallel over samples.
  std::vector<ColorMaskSample> samples(n);
  const double gen_serial = best_of(3, [&] {
    for (std::size_t i = 0; i < n; ++i) gen.color_into(i, samples[i]);
  });
  std::vector<ColorMaskSample> samples_omp(n);
  const double gen_omp = best_of(3, [&] {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      gen.color_into(static_cast<std::size_t>(i), samples_omp[static_cast<std::size_t>(i)]);
    }
  });
  bool same_masks = true;
  for (std::size_t i = 0; i < n; ++i) same_masks = same_masks && samples[i].nonmasked == samples_omp[i].nonmasked;
  report("color mask synthesis", gen_serial, gen_omp, same_masks);

  ScoreMatrix scores(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    scores(i, 0) = static_cast<double>(i % 17) / 17.0;
    scores(i, 1) = static_cast<double>(i % 5) / 5.0;
  }

  // Binary kernel, fed the nonmasked maps as soft masks.
  std::vector<const double*> masks(n);
  for (std::size_t i = 0; i < n; ++i) masks[i] = samples[i].nonmasked.data().data();
  const kernels::BinaryWeight weight{0.5, 4.0};
  std::vector<double> acc_s(2 * px), sq_s(2 * px), acc_p(2 * px), sq_p(2 * px);
  const double bin_serial = best_of(3, [&] {
    std::fill(acc_s.begin(), acc_s.end(), 0.0);
    std::fill(sq_s.begin(), sq_s.end(), 0.0);
    kernels::accumulate_binary_serial(masks, px, scores, weight, acc_s, sq_s);
  });
  const double bin_omp = best_of(3, [&] {
    std::fill(acc_p.begin(), acc_p.end(), 0.0);
    std::fill(sq_p.begin(), sq_p.end(), 0.0);
    kernels::accumulate_binary_omp(masks, px, scores, weight, acc_p, sq_p, threads);
  });
  report("binary accumulation", bin_serial, bin_omp, acc_s == acc_p && sq_s == sq_p);

  std::vector<const double*> channels;
  std::vector<const double*> nonmasked;
  for (const auto& s : samples) {
    for (const auto& c : s.channels) channels.push_back(c.data().data());
    nonmasked.push_back(s.nonmasked.data().data());
  }
  const kernels::ColorBatch batch{channels, nonmasked, k, px};
  std::vector<double> raw_s(2 * k * px), base_s(2 * px), csq_s(2 * k * px);
  std::vector<double> raw_p(2 * k * px), base_p(2 * px), csq_p(2 * k * px);
  const double col_serial = best_of(3, [&] {
    for (auto* v : {&raw_s, &base_s, &csq_s}) std::fill(v->begin(), v->end(), 0.0);
    kernels::accumulate_color_serial(batch, scores, cfg.p_mask, raw_s, base_s, csq_s);
  });
  const double col_omp = best_of(3, [&] {
    for (auto* v : {&raw_p, &base_p, &csq_p}) std::fill(v->begin(), v->end(), 0.0);
    kernels::accumulate_color_omp(batch, scores, cfg.p_mask, raw_p, base_p, csq_p, threads);
  });
  report("color accumulation", col_serial, col_omp, raw_s == raw_p && base_s == base_p && csq_s == csq_p);
  return 0;
}
