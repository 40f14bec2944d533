#include "proprio/features.hpp"

#include <cmath>
#include <stdexcept>

#include "proprio/filters.hpp"

namespace proprio {

FeatureVector extract_features(const GrayImage& g, const FilterConfig& cfg, int s) {
    cfg.validate();
    if (!g.valid()) throw std::invalid_argument("extract_features: invalid image");
    if (s < 1 || s > g.width || s > g.height)
        throw std::invalid_argument("extract_features: grid side out of range");

    const GrayImage a = adaptive_threshold(g, cfg);
    const GrayImage d = morph(a, MorphMode::dilate, cfg);
    const GrayImage e = morph(a, MorphMode::erode, cfg);
    const GrayImage c = canny(g, cfg);
    const GrayImage m = binary_threshold(g, cfg.binary_offset);

    FeatureVector mu;
    mu.s = s;
    mu.values.reserve(static_cast<std::size_t>(6) * s * s);
    for (const GrayImage* img : {&c, &m, &g, &a, &e, &d}) {
        const PooledGrid grid = average_pool(*img, s);
        mu.values.insert(mu.values.end(), grid.values.begin(), grid.values.end());
    }
    return mu;
}

Normalizer fit_normalizer(const std::vector<FeatureVector>& features) {
    if (features.size() < 2)
        throw std::invalid_argument("fit_normalizer: need at least 2 samples");
    const std::size_t dim = features.front().size();
    for (const auto& f : features)
        if (f.size() != dim)
            throw std::invalid_argument("fit_normalizer: inconsistent feature lengths");

    Normalizer n;
    n.mean.assign(dim, 0.0);
    n.std.assign(dim, 0.0);
    const double count = static_cast<double>(features.size());
    for (const auto& f : features)
        for (std::size_t i = 0; i < dim; ++i) n.mean[i] += f.values[i];
    for (std::size_t i = 0; i < dim; ++i) n.mean[i] /= count;
    for (const auto& f : features)
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = f.values[i] - n.mean[i];
            n.std[i] += d * d;
        }
    for (std::size_t i = 0; i < dim; ++i) {
        n.std[i] = std::sqrt(n.std[i] / count);
        if (n.std[i] < 1e-12) n.std[i] = 1.0;
    }
    return n;
}

FeatureVector normalize(const FeatureVector& mu, const Normalizer& n) {
    if (mu.size() != n.mean.size() || mu.size() != n.std.size())
        throw std::invalid_argument("normalize: length mismatch");
    FeatureVector out;
    out.s = mu.s;
    out.values.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        out.values[i] = (mu.values[i] - n.mean[i]) / n.std[i];
    return out;
}

}  // namespace proprio
