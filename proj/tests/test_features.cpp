#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "proprio/features.hpp"
#include "proprio/filters.hpp"
#include "proprio/ref/filters_ref.hpp"
#include "proprio/util.hpp"

using namespace proprio;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(
                hash3(seed, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y)) & 0xff);
    return img;
}

}  // namespace

TEST_CASE("feature length law: 6*s^2 for s in 1..4") {
    const GrayImage g = random_image(40, 30, 1);
    const FilterConfig cfg;
    for (int s = 1; s <= 4; ++s) {
        const FeatureVector mu = extract_features(g, cfg, s);
        CHECK(mu.size() == static_cast<std::size_t>(6 * s * s));
        CHECK(mu.s == s);
        for (double v : mu.values) {
            CHECK(v >= 0.0);
            CHECK(v <= 255.0);
        }
    }
}

TEST_CASE("s=1 gray entry equals the global mean") {
    const GrayImage g = random_image(33, 27, 2);
    const FeatureVector mu = extract_features(g, FilterConfig{}, 1);
    REQUIRE(mu.size() == 6);
    double mean = 0.0;
    for (auto v : g.data) mean += v;
    mean /= static_cast<double>(g.pixel_count());
    // Block order canny, binary, gray, adaptive, eroded, dilated.
    CHECK(mu.values[2] == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("constant black image features match the reference pipeline") {
    const GrayImage g(64, 64, 0);
    const FilterConfig cfg;
    const int s = 2;
    const FeatureVector mu = extract_features(g, cfg, s);
    REQUIRE(mu.size() == 24);

    // Composition through the brute-force filters decides the expected
    // values: adaptive threshold of a constant image saturates, so the
    // adaptive/eroded/dilated blocks are 255 and the rest are 0.
    const GrayImage a = ref::adaptive_threshold(g, cfg);
    for (auto v : a.data) REQUIRE(v == 255);
    for (int i = 0; i < 3 * s * s; ++i) CHECK(mu.values[i] == 0.0);            // c, m, g
    for (int i = 3 * s * s; i < 6 * s * s; ++i) CHECK(mu.values[i] == 255.0);  // a, e, d
}

TEST_CASE("feature pipeline agrees with a reference composition") {
    const GrayImage g = random_image(48, 48, 17);
    const FilterConfig cfg;
    const int s = 3;
    const FeatureVector mu = extract_features(g, cfg, s);

    const GrayImage a = ref::adaptive_threshold(g, cfg);
    std::vector<PooledGrid> blocks = {
        ref::average_pool(ref::canny(g, cfg), s),
        ref::average_pool(ref::binary_threshold(g, cfg.binary_offset), s),
        ref::average_pool(g, s),
        ref::average_pool(a, s),
        ref::average_pool(ref::erode(a, cfg), s),
        ref::average_pool(ref::dilate(a, cfg), s),
    };
    std::size_t k = 0;
    for (const auto& b : blocks)
        for (double v : b.values) CHECK(mu.values[k++] == v);
    CHECK(k == mu.size());
}

TEST_CASE("normalizer fit and apply") {
    SUBCASE("two-point example") {
        FeatureVector a{0, {0.0, 0.0}}, b{0, {2.0, 2.0}};
        const Normalizer n = fit_normalizer({a, b});
        CHECK(n.mean == std::vector<double>{1.0, 1.0});
        CHECK(n.std == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("identical vectors trigger the std floor") {
        FeatureVector a{0, {3.0, 5.0}};
        const Normalizer n = fit_normalizer({a, a, a});
        CHECK(n.std == std::vector<double>{1.0, 1.0});
        const FeatureVector z = normalize(a, n);
        CHECK(z.values == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("mean vector maps to zero, mean plus std maps to one") {
        std::vector<FeatureVector> fs;
        for (int i = 0; i < 50; ++i) {
            FeatureVector f;
            f.values = {uniform01(hash2(31, i)) * 10, uniform01(hash2(32, i)) * 3 - 7};
            fs.push_back(f);
        }
        const Normalizer n = fit_normalizer(fs);
        FeatureVector mean{0, n.mean};
        for (double v : normalize(mean, n).values) CHECK(v == doctest::Approx(0.0));
        FeatureVector shifted{0, {n.mean[0] + n.std[0], n.mean[1] + n.std[1]}};
        for (double v : normalize(shifted, n).values) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("normalize then invert recovers the input") {
        std::vector<FeatureVector> fs;
        for (int i = 0; i < 20; ++i) {
            FeatureVector f;
            f.values = {uniform01(hash2(41, i)), uniform01(hash2(42, i)) * 100};
            fs.push_back(f);
        }
        const Normalizer n = fit_normalizer(fs);
        const FeatureVector z = normalize(fs[3], n);
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double back = z.values[i] * n.std[i] + n.mean[i];
            CHECK(back == doctest::Approx(fs[3].values[i]).epsilon(1e-9));
        }
    }
    SUBCASE("standard-normal samples recover mean 0 and std 1") {
        std::vector<FeatureVector> fs;
        for (int i = 0; i < 1000; ++i) {
            FeatureVector f;
            f.values.resize(4);
            for (int j = 0; j < 4; ++j) f.values[j] = normal01(hash3(77, i, j));
            fs.push_back(f);
        }
        const Normalizer n = fit_normalizer(fs);
        for (int j = 0; j < 4; ++j) {
            CHECK(std::abs(n.mean[j]) < 0.1);
            CHECK(std::abs(n.std[j] - 1.0) < 0.1);
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fit_normalizer({}), std::invalid_argument);
        FeatureVector a{0, {1.0}}, b{0, {1.0, 2.0}};
        CHECK_THROWS_AS(fit_normalizer({a, b}), std::invalid_argument);
        Normalizer n;
        n.mean = {0.0};
        n.std = {1.0};
        CHECK_THROWS_AS(normalize(b, n), std::invalid_argument);
    }
}

TEST_CASE("training-set statistics after fit and normalize") {
    std::vector<FeatureVector> fs;
    for (int i = 0; i < 100; ++i) {
        FeatureVector f;
        f.values.resize(8);
        for (int j = 0; j < 8; ++j) f.values[j] = uniform01(hash3(55, i, j)) * (j + 1);
        f.values[7] = 4.0;  // constant coordinate exercises the floor
        fs.push_back(f);
    }
    const Normalizer n = fit_normalizer(fs);
    std::vector<double> mean(8, 0.0), var(8, 0.0);
    for (const auto& f : fs) {
        const FeatureVector z = normalize(f, n);
        for (int j = 0; j < 8; ++j) mean[j] += z.values[j];
    }
    for (auto& m : mean) m /= 100.0;
    for (const auto& f : fs) {
        const FeatureVector z = normalize(f, n);
        for (int j = 0; j < 8; ++j) var[j] += (z.values[j] - mean[j]) * (z.values[j] - mean[j]);
    }
    for (int j = 0; j < 8; ++j) {
        CHECK(std::abs(mean[j]) < 1e-9);
        if (j < 7) CHECK(std::abs(std::sqrt(var[j] / 100.0) - 1.0) < 1e-6);
    }
    // Floored coordinate: centered but not scaled.
    CHECK(var[7] == doctest::Approx(0.0));
}

TEST_CASE("block order constant is frozen") {
    CHECK(std::string(kBlockOrder) == "canny,binary,gray,adaptive,eroded,dilated");
}
