// Benchmarks the optimized (separable, OpenMP) filter kernels against the
// serial brute-force reference on the same frames, verifying byte equality
// while timing both.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "proprio/filters.hpp"
#include "proprio/ref/filters_ref.hpp"
#include "proprio/util.hpp"

namespace {

proprio::GrayImage make_frame(int w, int h, std::uint64_t seed) {
    proprio::GrayImage img(w, h);
    const int cx = w / 2, cy = h / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double r = std::sqrt(dx * dx + dy * dy);
            // Concentric bands plus hashed speckle, loosely like the real frames.
            int v = (static_cast<int>(r / 18.0) % 2 == 0) ? 190 : 25;
            v += static_cast<int>(proprio::hash3(seed, static_cast<std::uint64_t>(x),
                                                 static_cast<std::uint64_t>(y)) %
                                  31) -
                 15;
            img.at(x, y) = static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
        }
    }
    return img;
}

double time_ms(const std::function<void()>& fn, int iters) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"filter kernel benchmark: serial reference vs optimized"};
    int width = 640, height = 480, iters = 3;
    std::uint64_t seed = 1;
    app.add_option("--width", width, "frame width")->check(CLI::PositiveNumber);
    app.add_option("--height", height, "frame height")->check(CLI::PositiveNumber);
    app.add_option("--iters", iters, "timing iterations per kernel")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "frame content seed");
    CLI11_PARSE(app, argc, argv);

    const proprio::GrayImage g = make_frame(width, height, seed);
    const proprio::FilterConfig cfg;
    const proprio::GrayImage a = proprio::adaptive_threshold(g, cfg);

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("frame %dx%d, %d iteration(s), %d thread(s)\n", width, height, iters, threads);
    std::printf("%-18s %12s %12s %9s  %s\n", "kernel", "ref ms", "fast ms", "speedup", "equal");

    struct Row {
        const char* name;
        std::function<proprio::GrayImage()> ref;
        std::function<proprio::GrayImage()> fast;
    };
    const std::vector<Row> rows = {
        {"adaptive", [&] { return proprio::ref::adaptive_threshold(g, cfg); },
         [&] { return proprio::adaptive_threshold(g, cfg); }},
        {"binary", [&] { return proprio::ref::binary_threshold(g, cfg.binary_offset); },
         [&] { return proprio::binary_threshold(g, cfg.binary_offset); }},
        {"canny", [&] { return proprio::ref::canny(g, cfg); },
         [&] { return proprio::canny(g, cfg); }},
        {"dilate", [&] { return proprio::ref::dilate(a, cfg); },
         [&] { return proprio::morph(a, proprio::MorphMode::dilate, cfg); }},
        {"erode", [&] { return proprio::ref::erode(a, cfg); },
         [&] { return proprio::morph(a, proprio::MorphMode::erode, cfg); }},
    };

    bool all_equal = true;
    for (const auto& row : rows) {
        const proprio::GrayImage r = row.ref();
        const proprio::GrayImage f = row.fast();
        const bool equal = (r == f);
        all_equal = all_equal && equal;
        const double tr = time_ms([&] { (void)row.ref(); }, iters);
        const double tf = time_ms([&] { (void)row.fast(); }, iters);
        std::printf("%-18s %12.3f %12.3f %8.2fx  %s\n", row.name, tr, tf, tr / tf,
                    equal ? "yes" : "NO");
    }

    // Pooling timed on its own: same result type on both sides.
    {
        const proprio::PooledGrid pr = proprio::ref::average_pool(g, 3);
        const proprio::PooledGrid pf = proprio::average_pool(g, 3);
        const bool equal = pr.values == pf.values;
        all_equal = all_equal && equal;
        const double tr = time_ms([&] { (void)proprio::ref::average_pool(g, 3); }, iters);
        const double tf = time_ms([&] { (void)proprio::average_pool(g, 3); }, iters);
        std::printf("%-18s %12.3f %12.3f %8.2fx  %s\n", "average_pool", tr, tf, tr / tf,
                    equal ? "yes" : "NO");
    }

    if (!all_equal) {
        std::fprintf(stderr, "kernel_bench: optimized output diverged from reference\n");
        return 1;
    }
    return 0;
}
