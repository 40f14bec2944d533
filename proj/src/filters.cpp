#include "proprio/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace proprio {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void require_valid(const GrayImage& g, const char* op) {
    if (!g.valid()) throw std::invalid_argument(std::string(op) + ": invalid image");
}

}  // namespace

void FilterConfig::validate() const {
    if (adaptive_block_size < 3 || adaptive_block_size % 2 == 0)
        throw std::invalid_argument("adaptive_block_size must be odd and >= 3");
    if (canny_kernel < 3 || canny_kernel % 2 == 0)
        throw std::invalid_argument("canny_kernel must be odd and >= 3");
    if (canny_low > canny_high)
        throw std::invalid_argument("canny_low must be <= canny_high");
    if (morph_kernel < 1)
        throw std::invalid_argument("morph_kernel must be >= 1");
}

namespace detail {

std::vector<std::int64_t> gaussian_kernel_fp(int ksize) {
    const int c = ksize / 2;
    const double sigma = 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8;
    std::vector<double> w(ksize);
    double sum = 0.0;
    for (int i = 0; i < ksize; ++i) {
        const double d = i - c;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    std::vector<std::int64_t> q(ksize);
    for (int i = 0; i < ksize; ++i) q[i] = std::llround(w[i] / sum * 4096.0);
    return q;
}

void sobel_kernels(int ksize, std::vector<int>& smooth, std::vector<int>& deriv) {
    smooth = {1, 2, 1};
    deriv = {-1, 0, 1};
    auto conv = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> r(a.size() + b.size() - 1, 0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
        return r;
    };
    for (int size = 3; size < ksize; size += 2) {
        smooth = conv(smooth, {1, 2, 1});
        deriv = conv(deriv, {1, 2, 1});
    }
}

}  // namespace detail

GrayImage to_grayscale(const RgbImage& rgb) {
    if (!rgb.valid())
        throw std::invalid_argument("to_grayscale: channel data does not match dimensions");
    GrayImage out(rgb.width, rgb.height);
    const std::size_t n = rgb.pixel_count();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const std::uint8_t* p = &rgb.data[static_cast<std::size_t>(i) * 3];
        const long y = std::lround(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
        out.data[i] = static_cast<std::uint8_t>(clampi(static_cast<int>(y), 0, 255));
    }
    return out;
}

GrayImage adaptive_threshold(const GrayImage& g, const FilterConfig& cfg) {
    cfg.validate();
    require_valid(g, "adaptive_threshold");
    const int w = g.width, h = g.height;
    const int k = cfg.adaptive_block_size, c = k / 2;
    const auto q = detail::gaussian_kernel_fp(k);
    std::int64_t tap_sum = 0;
    for (auto v : q) tap_sum += v;
    const std::int64_t qq = tap_sum * tap_sum;

    // Both passes run in double-precision FMA sweeps but stay exact: every
    // intermediate is an integer (row sums <= tap_sum*255 ~ 2^20, column sums
    // <= tap_sum^2*255 ~ 2^32, products <= 2^41), and FMAs over exactly
    // representable integers below 2^53 round to the integer itself. The
    // result is therefore bit-identical to the all-int64 reference.
    if (tap_sum * 255 > std::numeric_limits<std::int32_t>::max())
        throw std::invalid_argument("adaptive_threshold: block size too large");
    const std::vector<double> qd(q.begin(), q.end());

    // Horizontal pass: replicate-padded row, then tap-major FMA sweeps.
    std::vector<std::int32_t> rowsum(g.pixel_count());
#pragma omp parallel
    {
        std::vector<double> padded(static_cast<std::size_t>(w) + 2 * static_cast<std::size_t>(c));
        std::vector<double> acc(static_cast<std::size_t>(w));
#pragma omp for schedule(static)
        for (int y = 0; y < h; ++y) {
            const std::uint8_t* src = g.row(y);
            for (int i = 0; i < c; ++i) padded[static_cast<std::size_t>(i)] = src[0];
            for (int x = 0; x < w; ++x) padded[static_cast<std::size_t>(c + x)] = src[x];
            for (int i = 0; i < c; ++i)
                padded[static_cast<std::size_t>(c + w + i)] = src[w - 1];
            // Symmetric taps are paired (q[j] == q[k-1-j]) to halve the FMAs;
            // the pairwise pixel sums are still exact integers.
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int j = 0; j < c; ++j) {
                const double qj = qd[static_cast<std::size_t>(j)];
                const double* lo = padded.data() + j;
                const double* hi = padded.data() + (k - 1 - j);
                for (int x = 0; x < w; ++x)
                    acc[static_cast<std::size_t>(x)] += qj * (lo[x] + hi[x]);
            }
            {
                const double qc = qd[static_cast<std::size_t>(c)];
                const double* p = padded.data() + c;
                for (int x = 0; x < w; ++x) acc[static_cast<std::size_t>(x)] += qc * p[x];
            }
            std::int32_t* dst = &rowsum[static_cast<std::size_t>(y) * w];
            for (int x = 0; x < w; ++x)
                dst[x] = static_cast<std::int32_t>(acc[static_cast<std::size_t>(x)]);
        }
    }

    // Vertical pass fused with the threshold comparison:
    // out = max_value  iff  g > weighted_mean - C  iff  (g + C) * qq > acc.
    GrayImage out(w, h);
    const std::uint8_t maxv = static_cast<std::uint8_t>(clampi(cfg.adaptive_max_value, 0, 255));
    const std::int64_t cc = cfg.adaptive_c;
    std::array<double, 256> lhs;
    for (int v = 0; v < 256; ++v)
        lhs[static_cast<std::size_t>(v)] = static_cast<double>((v + cc) * qq);
#pragma omp parallel
    {
        std::vector<double> acc(static_cast<std::size_t>(w));
#pragma omp for schedule(static)
        for (int y = 0; y < h; ++y) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int i = 0; i < c; ++i) {
                const std::int32_t* up =
                    &rowsum[static_cast<std::size_t>(clampi(y + i - c, 0, h - 1)) * w];
                const std::int32_t* dn =
                    &rowsum[static_cast<std::size_t>(clampi(y + (k - 1 - i) - c, 0, h - 1)) * w];
                const double qi = qd[static_cast<std::size_t>(i)];
                for (int x = 0; x < w; ++x)
                    acc[static_cast<std::size_t>(x)] +=
                        qi * (static_cast<double>(up[x]) + static_cast<double>(dn[x]));
            }
            {
                const std::int32_t* mid = &rowsum[static_cast<std::size_t>(y) * w];
                const double qc = qd[static_cast<std::size_t>(c)];
                for (int x = 0; x < w; ++x)
                    acc[static_cast<std::size_t>(x)] += qc * static_cast<double>(mid[x]);
            }
            const std::uint8_t* src = g.row(y);
            std::uint8_t* dst = out.row(y);
            for (int x = 0; x < w; ++x)
                dst[x] = (lhs[src[x]] > acc[static_cast<std::size_t>(x)]) ? maxv : 0;
        }
    }
    return out;
}

GrayImage binary_threshold(const GrayImage& g, int offset) {
    require_valid(g, "binary_threshold");
    const long long n = static_cast<long long>(g.pixel_count());
    std::int64_t sum = 0;
#pragma omp parallel for schedule(static) reduction(+ : sum)
    for (long long i = 0; i < n; ++i) sum += g.data[i];

    // g > sum/n + offset  iff  g*n > sum + offset*n, all in exact integers.
    const std::int64_t rhs = sum + static_cast<std::int64_t>(offset) * n;
    GrayImage out(g.width, g.height);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i)
        out.data[i] = (static_cast<std::int64_t>(g.data[i]) * n > rhs) ? 255 : 0;
    return out;
}

namespace {

/// One tap-major sweep: dst[x] op= src[x + off] with edge replication,
/// written so each offset is a straight byte-min/max pass over the row.
template <typename Op>
void morph_row_sweep(std::uint8_t* dst, const std::uint8_t* src, int w, int d, Op op) {
    for (int x = 0; x < std::min(d, w); ++x) dst[x] = op(dst[x], src[0]);
    for (int x = d; x < w; ++x) dst[x] = op(dst[x], src[x - d]);
    for (int x = 0; x < w - d; ++x) dst[x] = op(dst[x], src[x + d]);
    for (int x = std::max(w - d, 0); x < w; ++x) dst[x] = op(dst[x], src[w - 1]);
}

template <typename Op>
GrayImage morph_impl(const GrayImage& a, int k, Op op) {
    const int w = a.width, h = a.height;
    const int c = k / 2;
    // Min/max over a square window separates into a horizontal and a vertical
    // pass; each pass is a set of branch-free offset sweeps over whole rows.
    GrayImage tmp(w, h), out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = a.row(y);
        std::uint8_t* dst = tmp.row(y);
        std::copy(src, src + w, dst);
        for (int d = 1; d <= c; ++d) morph_row_sweep(dst, src, w, d, op);
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::uint8_t* dst = out.row(y);
        const std::uint8_t* mid = tmp.row(y);
        std::copy(mid, mid + w, dst);
        for (int d = 1; d <= c; ++d) {
            const std::uint8_t* up = tmp.row(clampi(y - d, 0, h - 1));
            const std::uint8_t* dn = tmp.row(clampi(y + d, 0, h - 1));
            for (int x = 0; x < w; ++x) dst[x] = op(dst[x], up[x]);
            for (int x = 0; x < w; ++x) dst[x] = op(dst[x], dn[x]);
        }
    }
    return out;
}

}  // namespace

GrayImage morph(const GrayImage& a, MorphMode mode, const FilterConfig& cfg) {
    cfg.validate();
    require_valid(a, "morph");
    if (mode == MorphMode::dilate)
        return morph_impl(a, cfg.morph_kernel,
                          [](std::uint8_t p, std::uint8_t q) { return std::max(p, q); });
    return morph_impl(a, cfg.morph_kernel,
                      [](std::uint8_t p, std::uint8_t q) { return std::min(p, q); });
}

GrayImage canny(const GrayImage& g, const FilterConfig& cfg) {
    cfg.validate();
    require_valid(g, "canny");
    const int w = g.width, h = g.height;
    const int k = cfg.canny_kernel, c = k / 2;
    if (w < k || h < k)
        throw std::invalid_argument("canny: image smaller than sobel kernel");

    std::vector<int> smooth, deriv;
    detail::sobel_kernels(k, smooth, deriv);

    // Separable sobel with edge replication; all arithmetic in integers.
    const std::size_t n = g.pixel_count();
    std::vector<std::int32_t> tmpd(n), tmps(n);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = g.row(y);
        std::int32_t* td = &tmpd[static_cast<std::size_t>(y) * w];
        std::int32_t* ts = &tmps[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            std::int32_t ad = 0, as = 0;
            for (int j = 0; j < k; ++j) {
                const std::int32_t v = src[clampi(x + j - c, 0, w - 1)];
                ad += deriv[j] * v;
                as += smooth[j] * v;
            }
            td[x] = ad;
            ts[x] = as;
        }
    }
    std::vector<std::int32_t> gx(n), gy(n);
    std::vector<std::int64_t> mag2(n);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int32_t ax = 0, ay = 0;
            for (int i = 0; i < k; ++i) {
                const std::size_t r = static_cast<std::size_t>(clampi(y + i - c, 0, h - 1)) * w;
                ax += smooth[i] * tmpd[r + x];
                ay += deriv[i] * tmps[r + x];
            }
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            gx[idx] = ax;
            gy[idx] = ay;
            mag2[idx] = static_cast<std::int64_t>(ax) * ax + static_cast<std::int64_t>(ay) * ay;
        }
    }

    const std::int64_t low2 = static_cast<std::int64_t>(cfg.canny_low) * cfg.canny_low;
    const std::int64_t high2 = static_cast<std::int64_t>(cfg.canny_high) * cfg.canny_high;

    auto mag_at = [&](int x, int y) -> std::int64_t {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return mag2[static_cast<std::size_t>(y) * w + x];
    };

    // Non-maximum suppression with integer sector classification, then the
    // double threshold: 0 none, 1 weak candidate, 2 strong seed.
    std::vector<std::uint8_t> state(n, 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const std::int64_t m = mag2[idx];
            if (m <= low2) continue;
            const std::int64_t ax = std::abs(static_cast<std::int64_t>(gx[idx]));
            const std::int64_t ay = std::abs(static_cast<std::int64_t>(gy[idx]));
            const std::int64_t y15 = ay << 15;
            const std::int64_t tg22 = ax * detail::kTan22FixedPoint;
            int dx, dy;
            if (y15 < tg22) {
                dx = 1;
                dy = 0;
            } else {
                const std::int64_t tg67 = tg22 + (ax << 16);
                if (y15 > tg67) {
                    dx = 0;
                    dy = 1;
                } else {
                    const bool same_sign = (gx[idx] < 0) == (gy[idx] < 0);
                    dx = 1;
                    dy = same_sign ? 1 : -1;
                }
            }
            if (m > mag_at(x - dx, y - dy) && m >= mag_at(x + dx, y + dy))
                state[idx] = (m > high2) ? 2 : 1;
        }
    }

    // Hysteresis: grow from strong seeds through weak candidates, 8-connected.
    GrayImage out(w, h);
    std::vector<std::size_t> stack;
    stack.reserve(256);
    for (std::size_t i = 0; i < n; ++i) {
        if (state[i] != 2) continue;
        state[i] = 3;
        stack.push_back(i);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            out.data[p] = 255;
            const int px = static_cast<int>(p % w), py = static_cast<int>(p / w);
            for (int oy = -1; oy <= 1; ++oy) {
                for (int ox = -1; ox <= 1; ++ox) {
                    const int qx = px + ox, qy = py + oy;
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    const std::size_t qi = static_cast<std::size_t>(qy) * w + qx;
                    if (state[qi] == 1 || state[qi] == 2) {
                        state[qi] = 3;
                        stack.push_back(qi);
                    }
                }
            }
        }
    }
    return out;
}

PooledGrid average_pool(const GrayImage& img, int s) {
    require_valid(img, "average_pool");
    if (s < 1 || s > img.width || s > img.height)
        throw std::invalid_argument("average_pool: grid side must satisfy 1 <= s <= min(width, height)");
    PooledGrid grid;
    grid.s = s;
    grid.values.resize(static_cast<std::size_t>(s) * s);
    const int w = img.width, h = img.height;
#pragma omp parallel for schedule(static) collapse(2)
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            const int y0 = static_cast<int>(static_cast<std::int64_t>(i) * h / s);
            const int y1 = static_cast<int>(static_cast<std::int64_t>(i + 1) * h / s);
            const int x0 = static_cast<int>(static_cast<std::int64_t>(j) * w / s);
            const int x1 = static_cast<int>(static_cast<std::int64_t>(j + 1) * w / s);
            std::int64_t sum = 0;
            for (int y = y0; y < y1; ++y) {
                const std::uint8_t* row = img.row(y);
                for (int x = x0; x < x1; ++x) sum += row[x];
            }
            const std::int64_t count = static_cast<std::int64_t>(y1 - y0) * (x1 - x0);
            grid.values[static_cast<std::size_t>(i) * s + j] =
                static_cast<double>(sum) / static_cast<double>(count);
        }
    }
    return grid;
}

}  // namespace proprio
