#pragma once

#include <cstdint>
#include <vector>

namespace proprio {

/// 8-bit single-channel raster, row-major. The unit all filters consume and
/// produce; binary filter outputs use only the values {0, max_value}.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    const std::uint8_t* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }
    std::uint8_t* row(int y) { return data.data() + static_cast<std::size_t>(y) * width; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool valid() const { return width > 0 && height > 0 && data.size() == pixel_count(); }

    bool operator==(const GrayImage&) const = default;
};

/// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // r,g,b per pixel

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool valid() const { return width > 0 && height > 0 && data.size() == pixel_count() * 3; }

    bool operator==(const RgbImage&) const = default;
};

/// Parameters of the fixed filter array.
struct FilterConfig {
    int adaptive_block_size = 57;  // odd, >= 3
    int adaptive_c = 2;            // intensity offset subtracted from the local mean
    int adaptive_max_value = 255;
    int binary_offset = 100;       // added to the global mean for the binary threshold
    int canny_low = 100;
    int canny_high = 130;
    int canny_kernel = 3;          // odd, >= 3
    int morph_kernel = 5;          // square structuring element side

    /// Throws std::invalid_argument when a parameter violates its constraint.
    void validate() const;

    bool operator==(const FilterConfig&) const = default;
};

/// S x S grid of mean intensities, row-major.
struct PooledGrid {
    int s = 0;
    std::vector<double> values;

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * s + col]; }
};

}  // namespace proprio
