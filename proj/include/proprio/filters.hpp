#pragma once

#include <cstdint>
#include <vector>

#include "proprio/image.hpp"

namespace proprio {

enum class MorphMode { dilate, erode };

/// BT.601 luma conversion: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255].
GrayImage to_grayscale(const RgbImage& rgb);

/// Binary output: max_value where g(p) > gaussian-weighted local mean - C, else 0.
/// The window is block_size x block_size with edge replication. The gaussian
/// weights are quantized to 12-bit fixed point so that the separable fast path
/// and the naive reference produce bit-identical results.
GrayImage adaptive_threshold(const GrayImage& g, const FilterConfig& cfg);

/// Binary output: 255 where g(p) > mean(g) + offset, else 0. The mean is the
/// real-valued average over all pixels (comparison done in exact integers).
GrayImage binary_threshold(const GrayImage& g, int offset);

/// Sobel gradients (L2 magnitude), non-maximum suppression, double-threshold
/// hysteresis with 8-connectivity. Edge pixels are 255, the rest 0.
GrayImage canny(const GrayImage& g, const FilterConfig& cfg);

/// Per-pixel max (dilate) or min (erode) over a morph_kernel square window,
/// edge replication at the borders.
GrayImage morph(const GrayImage& a, MorphMode mode, const FilterConfig& cfg);

/// Mean intensity over an s x s partition. Region (i, j) spans columns
/// [floor(j W / s), floor((j+1) W / s)) and rows [floor(i H / s), floor((i+1) H / s)).
PooledGrid average_pool(const GrayImage& img, int s);

namespace detail {

/// Normalized gaussian taps quantized to 12-bit fixed point,
/// sigma = 0.3 ((ksize - 1) 0.5 - 1) + 0.8.
std::vector<std::int64_t> gaussian_kernel_fp(int ksize);

/// Smoothing / first-derivative tap pairs for a given sobel aperture
/// (3: [1 2 1] and [-1 0 1]; larger apertures by repeated [1 2 1] convolution).
void sobel_kernels(int ksize, std::vector<int>& smooth, std::vector<int>& deriv);

constexpr std::int64_t kTan22FixedPoint = 13573;  // round(tan(22.5 deg) * 2^15)

}  // namespace detail

}  // namespace proprio
