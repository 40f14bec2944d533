#include "proprio/plant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "proprio/util.hpp"

namespace proprio {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// Hash stream tags: dash phases, dot placement, per-frame pixel noise,
// per-axis trajectory phases.
constexpr std::uint64_t kStreamDash = 11;
constexpr std::uint64_t kStreamDotBellow = 21;
constexpr std::uint64_t kStreamDotAngle = 22;
constexpr std::uint64_t kStreamDotRadius = 23;
constexpr std::uint64_t kStreamNoise = 31;

// Internal sensor characteristic recovered by calibrate_linear; deliberately
// not exposed in the header.
constexpr double kTofGain = 1.08;
constexpr double kTofOffset = 17.0;

double round6(double v) { return static_cast<double>(std::llround(v * 1e6)) / 1e6; }

}  // namespace

void PatternSpec::validate() const {
    if (num_bellows < 1) throw std::invalid_argument("pattern: num_bellows must be >= 1");
    if (static_cast<int>(ring_radii_mm.size()) != num_bellows ||
        static_cast<int>(dash_count.size()) != num_bellows)
        throw std::invalid_argument("pattern: need one ring radius and dash count per bellow");
    for (int i = 0; i < num_bellows; ++i) {
        if (ring_radii_mm[i] <= 0.0 ||
            (i > 0 && ring_radii_mm[i] <= ring_radii_mm[i - 1]))
            throw std::invalid_argument("pattern: ring radii must be positive and increasing");
        if (dash_count[i] < 1) throw std::invalid_argument("pattern: dash_count must be >= 1");
    }
    if (dot_count < 0) throw std::invalid_argument("pattern: dot_count must be >= 0");
    if (dot_diameter_mm <= 0.0) throw std::invalid_argument("pattern: dot_diameter must be > 0");
    if (collapsed_diameter_mm <= 0.0 || ring_thickness_mm <= 0.0 || base_depth_mm <= 0.0 ||
        focal_ratio <= 0.0 || lighting_knee_mm <= 0.0)
        throw std::invalid_argument("pattern: geometric parameters must be > 0");
    if (dash_fill <= 0.0 || dash_fill > 1.0)
        throw std::invalid_argument("pattern: dash_fill must be in (0, 1]");
    if (dot_scatter_mm < 0.0 || noise_sigma < 0.0)
        throw std::invalid_argument("pattern: scatter and noise must be >= 0");
}

void Workspace::validate() const {
    if (x_max < x_min || y_max < y_min || z_max < z_min)
        throw std::invalid_argument("workspace empty: max below min");
    if (z_min < 0.0) throw std::invalid_argument("workspace: z_min must be >= 0");
}

std::pair<double, double> disturbance_xy(const DisturbanceSpec& d, double t) {
    if (d.amplitude_mm == 0.0 || t < d.start_s || t >= d.end_s) return {0.0, 0.0};
    const double w = kTau * d.freq_hz * t;
    return {d.amplitude_mm * std::sin(w), d.amplitude_mm * std::sin(w + d.phase_y)};
}

void PlantConfig::validate() const {
    if (pressure_time_constant_s <= 0.0 || elongation_time_constant_s <= 0.0)
        throw std::invalid_argument("plant: time constants must be > 0");
    if (elongation_map.size() < 2)
        throw std::invalid_argument("plant: elongation_map needs at least 2 points");
    for (std::size_t i = 1; i < elongation_map.size(); ++i)
        if (elongation_map[i].first <= elongation_map[i - 1].first ||
            elongation_map[i].second <= elongation_map[i - 1].second)
            throw std::invalid_argument("plant: elongation_map must be strictly increasing");
    if (z_max_mm <= 0.0 || p_max_bar <= 0.0)
        throw std::invalid_argument("plant: z_max and p_max must be > 0");
}

double map_elongation(const PlantConfig& cfg, double pressure_bar) {
    const auto& m = cfg.elongation_map;
    if (pressure_bar <= m.front().first) return m.front().second;
    if (pressure_bar >= m.back().first) return m.back().second;
    const auto it = std::upper_bound(
        m.begin(), m.end(), pressure_bar,
        [](double p, const std::pair<double, double>& e) { return p < e.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (pressure_bar - lo.first) / (hi.first - lo.first);
    return lo.second + f * (hi.second - lo.second);
}

std::vector<double> projected_ring_radii_px(const Pose& pose, const PatternSpec& spec,
                                            int width) {
    const double f = spec.focal_ratio * width;
    std::vector<double> out(static_cast<std::size_t>(spec.num_bellows));
    for (int i = 0; i < spec.num_bellows; ++i) {
        const double depth =
            spec.base_depth_mm + pose.z * (i + 1) / static_cast<double>(spec.num_bellows);
        out[static_cast<std::size_t>(i)] = f * spec.ring_radii_mm[static_cast<std::size_t>(i)] / depth;
    }
    return out;
}

namespace {

struct Canvas {
    int w, h;
    std::vector<std::uint8_t> px;

    Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_, 0) {}

    void blend(int x, int y, double coverage) {
        if (x < 0 || x >= w || y < 0 || y >= h || coverage <= 0.0) return;
        const auto v = static_cast<std::uint8_t>(std::lround(std::min(coverage, 1.0) * 255.0));
        std::uint8_t& dst = px[static_cast<std::size_t>(y) * w + x];
        if (v > dst) dst = v;
    }
};

/// Paint one dashed annulus: center (cx, cy), mid radius r, half thickness ht
/// (all px). Edges get a 1 px linear skirt so sub-pixel radius changes always
/// alter the raster.
void draw_dashed_ring(Canvas& c, double cx, double cy, double r, double ht, int dashes,
                      double fill, double phase) {
    const double rout = r + ht + 1.0;
    const double rin = std::max(0.0, r - ht - 1.0);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - rout)));
    const int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + rout)));
    for (int iy = y0; iy <= y1; ++iy) {
        const double dy = iy - cy;
        const double dy2 = dy * dy;
        if (dy2 > rout * rout) continue;
        const double xmax = std::sqrt(rout * rout - dy2);
        const double xmin = (rin * rin > dy2) ? std::sqrt(rin * rin - dy2) : 0.0;
        // One span through the middle when the inner circle is not reached on
        // this row, otherwise two symmetric spans.
        const int spans = (xmin > 0.0) ? 2 : 1;
        for (int sp = 0; sp < spans; ++sp) {
            double lo, hi;
            if (spans == 1) {
                lo = cx - xmax;
                hi = cx + xmax;
            } else if (sp == 0) {
                lo = cx - xmax;
                hi = cx - xmin;
            } else {
                lo = cx + xmin;
                hi = cx + xmax;
            }
            const int x0 = std::max(0, static_cast<int>(std::ceil(lo)));
            const int x1 = std::min(c.w - 1, static_cast<int>(std::floor(hi)));
            for (int ix = x0; ix <= x1; ++ix) {
                const double dx = ix - cx;
                const double dist = std::sqrt(dx * dx + dy2);
                const double cov = ht + 0.5 - std::abs(dist - r);
                if (cov <= 0.0) continue;
                double u = std::atan2(dy, dx) / kTau + 0.5 + phase;
                u -= std::floor(u);
                const double a = u * dashes;
                if (a - std::floor(a) < fill) c.blend(ix, iy, cov);
            }
        }
    }
}

void draw_dot(Canvas& c, double cx, double cy, double rpx) {
    const double reach = rpx + 1.0;
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
    const int y1 = std::min(c.h - 1, static_cast<int>(std::ceil(cy + reach)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
    const int x1 = std::min(c.w - 1, static_cast<int>(std::ceil(cx + reach)));
    for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) {
            const double dx = ix - cx;
            const double dy = iy - cy;
            c.blend(ix, iy, rpx + 0.5 - std::sqrt(dx * dx + dy * dy));
        }
}

}  // namespace

GrayImage render_frame(const Pose& pose, const PatternSpec& spec, int width, int height,
                       std::uint64_t seed, std::uint64_t frame_index) {
    spec.validate();
    if (width < 1 || height < 1) throw std::invalid_argument("render: empty image");
    const double half = spec.collapsed_diameter_mm / 2.0;
    if (std::abs(pose.x) > half || std::abs(pose.y) > half || pose.z < 0.0 || pose.z > 400.0)
        throw std::invalid_argument("pose outside renderable frustum");

    const double f = spec.focal_ratio * width;
    const double cx0 = 0.5 * (width - 1);
    const double cy0 = 0.5 * (height - 1);
    const int nb = spec.num_bellows;
    Canvas canvas(width, height);

    for (int i = 0; i < nb; ++i) {
        const double depth = spec.base_depth_mm + pose.z * (i + 1) / static_cast<double>(nb);
        const double cx = cx0 + f * pose.x / depth;
        const double cy = cy0 + f * pose.y / depth;
        const double r = f * spec.ring_radii_mm[static_cast<std::size_t>(i)] / depth;
        const double ht = 0.5 * f * spec.ring_thickness_mm / depth;
        const double phase =
            uniform01(hash3(seed, kStreamDash, static_cast<std::uint64_t>(i)));
        draw_dashed_ring(canvas, cx, cy, r, ht, spec.dash_count[static_cast<std::size_t>(i)],
                         spec.dash_fill, phase);
    }

    for (int j = 0; j < spec.dot_count; ++j) {
        const auto ju = static_cast<std::uint64_t>(j);
        const int b = static_cast<int>(hash3(seed, kStreamDotBellow, ju) %
                                       static_cast<std::uint64_t>(nb));
        const double theta = uniform01(hash3(seed, kStreamDotAngle, ju)) * kTau;
        const double rad = spec.ring_radii_mm[static_cast<std::size_t>(b)] +
                           (2.0 * uniform01(hash3(seed, kStreamDotRadius, ju)) - 1.0) *
                               spec.dot_scatter_mm;
        const double depth = spec.base_depth_mm + pose.z * (b + 1) / static_cast<double>(nb);
        const double cx = cx0 + f * (pose.x + rad * std::cos(theta)) / depth;
        const double cy = cy0 + f * (pose.y + rad * std::sin(theta)) / depth;
        draw_dot(canvas, cx, cy, f * (spec.dot_diameter_mm / 2.0) / depth);
    }

    const double brightness = std::min(1.0, pose.z / spec.lighting_knee_mm);
    const std::uint64_t noise_key = hash3(seed, kStreamNoise, frame_index);
    GrayImage out(width, height);
    const std::size_t n = out.data.size();
    for (std::size_t idx = 0; idx < n; ++idx) {
        double v = canvas.px[idx] * brightness;
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * normal01(hash2(noise_key, idx));
        out.data[idx] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    }
    return out;
}

PlantState step_plant(const PlantState& s, double p_command, double dt, const PlantConfig& cfg) {
    if (dt <= 0.0) throw std::invalid_argument("step_plant: dt must be > 0");
    const double cmd = std::clamp(p_command, 0.0, cfg.p_max_bar);
    // Explicit first-order step evaluated at the old state. Kept deliberately
    // first-order accurate so integrator consistency is testable by dt-halving.
    const double dp = (cmd - s.pressure_bar) / cfg.pressure_time_constant_s;
    const double dz = (map_elongation(cfg, s.pressure_bar) - s.z_mm) / cfg.elongation_time_constant_s;
    PlantState n;
    n.pressure_bar = std::max(0.0, s.pressure_bar + dt * dp);
    n.z_mm = std::clamp(s.z_mm + dt * dz, 0.0, cfg.z_max_mm);
    n.time_s = s.time_s + dt;
    const auto [x, y] = disturbance_xy(cfg.disturbance, n.time_s);
    n.x_mm = x;
    n.y_mm = y;
    return n;
}

double simulate_tof(const PlantState& s, double noise_sigma, std::uint64_t seed) {
    const double dist = std::sqrt(s.x_mm * s.x_mm + s.y_mm * s.y_mm + s.z_mm * s.z_mm);
    double raw = kTofGain * dist + kTofOffset;
    if (noise_sigma > 0.0) raw += noise_sigma * normal01(mix64(seed));
    return raw;
}

TofCalibration calibrate_linear(const std::vector<double>& raw, const std::vector<double>& z_gt) {
    if (raw.size() != z_gt.size()) throw std::invalid_argument("calibrate: size mismatch");
    const std::size_t n = raw.size();
    if (n < 2) throw std::invalid_argument("calibrate: need at least 2 points");
    double mr = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mr += raw[i];
        mz += z_gt[i];
    }
    mr /= static_cast<double>(n);
    mz /= static_cast<double>(n);
    double srr = 0.0, srz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        srr += (raw[i] - mr) * (raw[i] - mr);
        srz += (raw[i] - mr) * (z_gt[i] - mz);
    }
    if (srr == 0.0) throw std::invalid_argument("calibrate: constant raw readings");
    TofCalibration cal;
    cal.gain = srz / srr;
    cal.offset = mz - cal.gain * mr;
    return cal;
}

double band_limited(double t, std::uint64_t key, int components) {
    if (components < 1) throw std::invalid_argument("band_limited: need >= 1 component");
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= components; ++k) {
        const double w = 1.0 / k;
        // Each component's frequency is jittered by the key so the components
        // (and the per-axis signals built from different keys) are mutually
        // incommensurate: the excitation never repeats, and a long recording
        // progressively fills the workspace instead of retracing one loop.
        const double jitter = uniform01(hash2(key, 1000 + static_cast<std::uint64_t>(k)));
        const double freq = 0.05 * k * (1.0 + 0.37 * jitter);  // Hz, well under capture rate
        const double phi = uniform01(hash2(key, static_cast<std::uint64_t>(k))) * kTau;
        num += w * std::sin(kTau * freq * t + phi);
        den += w;
    }
    return num / den;
}

void GenConfig::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("gen: empty image size");
    if (rate_hz <= 0.0) throw std::invalid_argument("gen: rate must be > 0");
    if (excitation_components < 1) throw std::invalid_argument("gen: need >= 1 component");
    if (margin <= 0.0 || margin > 1.0) throw std::invalid_argument("gen: margin must be in (0, 1]");
}

Pose trajectory_pose(double t, const Workspace& ws, const GenConfig& gen, std::uint64_t seed) {
    const auto axis = [&](double lo, double hi, std::uint64_t stream) {
        const double c = 0.5 * (lo + hi);
        const double h = 0.5 * (hi - lo);
        if (h == 0.0) return c;
        return c + h * gen.margin * band_limited(t, hash2(seed, stream), gen.excitation_components);
    };
    Pose p;
    p.x = axis(ws.x_min, ws.x_max, 1);
    p.y = axis(ws.y_min, ws.y_max, 2);
    p.z = axis(ws.z_min, ws.z_max, 3);
    return p;
}

std::string describe_generation(const Workspace& ws, const PatternSpec& spec,
                                const GenConfig& gen) {
    std::ostringstream os;
    os << "workspace=" << format_double(ws.x_min) << ',' << format_double(ws.x_max) << ','
       << format_double(ws.y_min) << ',' << format_double(ws.y_max) << ','
       << format_double(ws.z_min) << ',' << format_double(ws.z_max) << '\n';
    os << "bellows=" << spec.num_bellows << '\n';
    os << "ring_radii_mm=";
    for (std::size_t i = 0; i < spec.ring_radii_mm.size(); ++i)
        os << (i ? "," : "") << format_double(spec.ring_radii_mm[i]);
    os << '\n' << "dash_count=";
    for (std::size_t i = 0; i < spec.dash_count.size(); ++i)
        os << (i ? "," : "") << spec.dash_count[i];
    os << '\n';
    os << "dots=" << spec.dot_count << ',' << format_double(spec.dot_diameter_mm) << ','
       << format_double(spec.dot_scatter_mm) << '\n';
    os << "ring_thickness_mm=" << format_double(spec.ring_thickness_mm) << '\n';
    os << "dash_fill=" << format_double(spec.dash_fill) << '\n';
    os << "collapsed_diameter_mm=" << format_double(spec.collapsed_diameter_mm) << '\n';
    os << "base_depth_mm=" << format_double(spec.base_depth_mm) << '\n';
    os << "focal_ratio=" << format_double(spec.focal_ratio) << '\n';
    os << "lighting_knee_mm=" << format_double(spec.lighting_knee_mm) << '\n';
    os << "noise_sigma=" << format_double(spec.noise_sigma) << '\n';
    os << "image=" << gen.width << 'x' << gen.height << '\n';
    os << "rate_hz=" << format_double(gen.rate_hz) << '\n';
    os << "excitation=" << gen.excitation_components << ',' << format_double(gen.margin) << '\n';
    return os.str();
}

Dataset generate_dataset(int n, const Workspace& ws, const PatternSpec& spec,
                         const GenConfig& gen, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
    ws.validate();
    spec.validate();
    gen.validate();

    Dataset ds;
    ds.meta.width = gen.width;
    ds.meta.height = gen.height;
    ds.meta.rate_hz = gen.rate_hz;
    ds.meta.seed = seed;
    Fnv1a h;
    h.update(describe_generation(ws, spec, gen));
    ds.meta.config_hash = to_hex(h.digest());

    ds.samples.resize(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i)
        ds.samples[static_cast<std::size_t>(i)] = generate_sample(i, ws, spec, gen, seed);
    return ds;
}

Sample generate_sample(int i, const Workspace& ws, const PatternSpec& spec, const GenConfig& gen,
                       std::uint64_t seed) {
    const double t = static_cast<double>(i) / gen.rate_hz;
    const Pose raw = trajectory_pose(t, ws, gen, seed);
    Sample s;
    s.pose = {round6(raw.x), round6(raw.y), round6(raw.z)};
    s.timestamp = round6(t);
    s.image =
        render_frame(s.pose, spec, gen.width, gen.height, seed, static_cast<std::uint64_t>(i));
    return s;
}

}  // namespace proprio
