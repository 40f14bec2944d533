#include "proprio/ref/filters_ref.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace proprio::ref {

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

std::uint8_t px(const GrayImage& g, int x, int y) {
    return g.at(clampi(x, 0, g.width - 1), clampi(y, 0, g.height - 1));
}

// Quantized gaussian taps: normalized weights scaled by 4096 and rounded.
std::vector<std::int64_t> gaussian_taps(int ksize) {
    const int c = ksize / 2;
    const double sigma = 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8;
    std::vector<double> w(ksize);
    double total = 0.0;
    for (int i = 0; i < ksize; ++i) {
        const double d = i - c;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[i];
    }
    std::vector<std::int64_t> q(ksize);
    for (int i = 0; i < ksize; ++i) q[i] = std::llround(w[i] / total * 4096.0);
    return q;
}

// Binomial-smoothed sobel pair of width ksize.
void sobel_taps(int ksize, std::vector<int>& smooth, std::vector<int>& deriv) {
    smooth = {1, 2, 1};
    deriv = {-1, 0, 1};
    for (int size = 3; size < ksize; size += 2) {
        auto widen = [](const std::vector<int>& a) {
            std::vector<int> r(a.size() + 2, 0);
            for (std::size_t i = 0; i < a.size(); ++i) {
                r[i] += a[i];
                r[i + 1] += 2 * a[i];
                r[i + 2] += a[i];
            }
            return r;
        };
        smooth = widen(smooth);
        deriv = widen(deriv);
    }
}

}  // namespace

GrayImage to_grayscale(const RgbImage& rgb) {
    if (!rgb.valid()) throw std::invalid_argument("ref::to_grayscale: invalid image");
    GrayImage out(rgb.width, rgb.height);
    for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
        const std::uint8_t* p = &rgb.data[i * 3];
        long y = std::lround(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
        if (y < 0) y = 0;
        if (y > 255) y = 255;
        out.data[i] = static_cast<std::uint8_t>(y);
    }
    return out;
}

GrayImage adaptive_threshold(const GrayImage& g, const FilterConfig& cfg) {
    cfg.validate();
    if (!g.valid()) throw std::invalid_argument("ref::adaptive_threshold: invalid image");
    const int k = cfg.adaptive_block_size, c = k / 2;
    const auto q = gaussian_taps(k);
    std::int64_t tap_sum = 0;
    for (auto v : q) tap_sum += v;
    const std::int64_t qq = tap_sum * tap_sum;
    const std::uint8_t maxv =
        static_cast<std::uint8_t>(clampi(cfg.adaptive_max_value, 0, 255));
    GrayImage out(g.width, g.height);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            std::int64_t acc = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    acc += q[i] * q[j] * px(g, x + j - c, y + i - c);
            const std::int64_t lhs =
                (static_cast<std::int64_t>(g.at(x, y)) + cfg.adaptive_c) * qq;
            out.at(x, y) = (lhs > acc) ? maxv : 0;
        }
    }
    return out;
}

GrayImage binary_threshold(const GrayImage& g, int offset) {
    if (!g.valid()) throw std::invalid_argument("ref::binary_threshold: invalid image");
    const std::int64_t n = static_cast<std::int64_t>(g.pixel_count());
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < g.pixel_count(); ++i) sum += g.data[i];
    GrayImage out(g.width, g.height);
    for (std::size_t i = 0; i < g.pixel_count(); ++i) {
        const std::int64_t lhs = static_cast<std::int64_t>(g.data[i]) * n;
        out.data[i] = (lhs > sum + static_cast<std::int64_t>(offset) * n) ? 255 : 0;
    }
    return out;
}

GrayImage canny(const GrayImage& g, const FilterConfig& cfg) {
    cfg.validate();
    if (!g.valid()) throw std::invalid_argument("ref::canny: invalid image");
    const int w = g.width, h = g.height;
    const int k = cfg.canny_kernel, c = k / 2;
    if (w < k || h < k)
        throw std::invalid_argument("ref::canny: image smaller than sobel kernel");

    std::vector<int> smooth, deriv;
    sobel_taps(k, smooth, deriv);

    // Full 2D convolutions for the two gradients.
    std::vector<std::int64_t> gx(g.pixel_count()), gy(g.pixel_count()), mag2(g.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int64_t ax = 0, ay = 0;
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                    const std::int64_t v = px(g, x + j - c, y + i - c);
                    ax += static_cast<std::int64_t>(smooth[i]) * deriv[j] * v;
                    ay += static_cast<std::int64_t>(deriv[i]) * smooth[j] * v;
                }
            }
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            gx[idx] = ax;
            gy[idx] = ay;
            mag2[idx] = ax * ax + ay * ay;
        }
    }

    auto mag_at = [&](int x, int y) -> std::int64_t {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return mag2[static_cast<std::size_t>(y) * w + x];
    };

    const std::int64_t low2 = static_cast<std::int64_t>(cfg.canny_low) * cfg.canny_low;
    const std::int64_t high2 = static_cast<std::int64_t>(cfg.canny_high) * cfg.canny_high;
    const std::int64_t tan22 = 13573;  // round(tan(22.5 deg) * 2^15)

    // 0 = rejected, 1 = weak candidate, 2 = strong.
    std::vector<std::uint8_t> state(g.pixel_count(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            const std::int64_t m = mag2[idx];
            if (m <= low2) continue;
            const std::int64_t ax = gx[idx] < 0 ? -gx[idx] : gx[idx];
            const std::int64_t ay = gy[idx] < 0 ? -gy[idx] : gy[idx];
            int dx, dy;
            if (ay * 32768 < ax * tan22) {
                dx = 1;
                dy = 0;
            } else if (ay * 32768 > ax * tan22 + ax * 65536) {
                dx = 0;
                dy = 1;
            } else if ((gx[idx] < 0) == (gy[idx] < 0)) {
                dx = 1;
                dy = 1;
            } else {
                dx = 1;
                dy = -1;
            }
            if (m > mag_at(x - dx, y - dy) && m >= mag_at(x + dx, y + dy))
                state[idx] = (m > high2) ? 2 : 1;
        }
    }

    // Hysteresis by sweeping to a fixed point: weak pixels that touch an
    // accepted pixel (8-neighborhood) become accepted.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * w + x;
                if (state[idx] != 1) continue;
                bool touch = false;
                for (int oy = -1; oy <= 1 && !touch; ++oy)
                    for (int ox = -1; ox <= 1 && !touch; ++ox) {
                        if (ox == 0 && oy == 0) continue;
                        const int qx = x + ox, qy = y + oy;
                        if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                        if (state[static_cast<std::size_t>(qy) * w + qx] == 2) touch = true;
                    }
                if (touch) {
                    state[idx] = 2;
                    changed = true;
                }
            }
        }
    }

    GrayImage out(w, h);
    for (std::size_t i = 0; i < g.pixel_count(); ++i) out.data[i] = (state[i] == 2) ? 255 : 0;
    return out;
}

namespace {

GrayImage morph_window(const GrayImage& a, const FilterConfig& cfg, bool take_max) {
    cfg.validate();
    if (!a.valid()) throw std::invalid_argument("ref::morph: invalid image");
    const int k = cfg.morph_kernel, c = k / 2;
    GrayImage out(a.width, a.height);
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            std::uint8_t best = px(a, x - c, y - c);
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                    const std::uint8_t v = px(a, x + j - c, y + i - c);
                    if (take_max ? (v > best) : (v < best)) best = v;
                }
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

}  // namespace

GrayImage dilate(const GrayImage& a, const FilterConfig& cfg) { return morph_window(a, cfg, true); }
GrayImage erode(const GrayImage& a, const FilterConfig& cfg) { return morph_window(a, cfg, false); }

PooledGrid average_pool(const GrayImage& img, int s) {
    if (!img.valid()) throw std::invalid_argument("ref::average_pool: invalid image");
    if (s < 1 || s > img.width || s > img.height)
        throw std::invalid_argument("ref::average_pool: bad grid side");
    PooledGrid grid;
    grid.s = s;
    grid.values.resize(static_cast<std::size_t>(s) * s);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            const int y0 = static_cast<int>(static_cast<std::int64_t>(i) * img.height / s);
            const int y1 = static_cast<int>(static_cast<std::int64_t>(i + 1) * img.height / s);
            const int x0 = static_cast<int>(static_cast<std::int64_t>(j) * img.width / s);
            const int x1 = static_cast<int>(static_cast<std::int64_t>(j + 1) * img.width / s);
            std::int64_t sum = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) sum += img.at(x, y);
            grid.values[static_cast<std::size_t>(i) * s + j] =
                static_cast<double>(sum) / static_cast<double>((y1 - y0) * (x1 - x0));
        }
    }
    return grid;
}

}  // namespace proprio::ref
