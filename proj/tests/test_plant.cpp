#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "proprio/dataset.hpp"
#include "proprio/features.hpp"
#include "proprio/plant.hpp"
#include "proprio/util.hpp"

using namespace proprio;

namespace {

std::pair<double, double> center_of_mass(const GrayImage& img) {
    double sx = 0.0, sy = 0.0, sv = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double v = img.at(x, y);
            sx += v * x;
            sy += v * y;
            sv += v;
        }
    REQUIRE(sv > 0.0);
    return {sx / sv, sy / sv};
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

TEST_CASE("renderer is deterministic in pose and seed") {
    const PatternSpec spec;
    const Pose pose{3.0, -2.0, 55.0};
    const GrayImage a = render_frame(pose, spec, 160, 120, 42, 7);
    const GrayImage b = render_frame(pose, spec, 160, 120, 42, 7);
    CHECK(a == b);
    const GrayImage c = render_frame(pose, spec, 160, 120, 42, 8);  // new noise draw
    CHECK(!(a == c));
    const GrayImage d = render_frame(pose, spec, 160, 120, 43, 7);  // new pattern
    CHECK(!(a == d));
}

TEST_CASE("centered pose renders a centered pattern") {
    PatternSpec spec;
    spec.dot_count = 0;
    spec.noise_sigma = 0.0;
    const GrayImage img = render_frame({0.0, 0.0, 60.0}, spec, 320, 240, 5);
    const auto [comx, comy] = center_of_mass(img);
    CHECK(std::abs(comx - 159.5) < 0.5);
    CHECK(std::abs(comy - 119.5) < 0.5);

    // Single solid ring: its center of mass IS the projected ring center, so
    // the lateral projection formula can be checked quantitatively.
    PatternSpec one;
    one.num_bellows = 1;
    one.ring_radii_mm = {28.0};
    one.dash_count = {24};
    one.dash_fill = 1.0;
    one.dot_count = 0;
    one.noise_sigma = 0.0;
    const GrayImage shifted = render_frame({6.0, 0.0, 60.0}, one, 320, 240, 5);
    const auto [sx, sy] = center_of_mass(shifted);
    const double depth = one.base_depth_mm + 60.0;  // single bellow carries full elongation
    const double expected = one.focal_ratio * 320.0 * 6.0 / depth;
    CHECK(sx - 159.5 == doctest::Approx(expected).epsilon(0.02));
    CHECK(std::abs(sy - 119.5) < 0.5);
}

TEST_CASE("outermost projected ring radius shrinks as the actuator extends") {
    const PatternSpec spec;
    double prev = 1e30;
    for (int k = 0; k < 10; ++k) {
        const double z = 20.0 + 8.0 * k;
        const auto radii = projected_ring_radii_px({0.0, 0.0, z}, spec, 640);
        const double outer = *std::max_element(radii.begin(), radii.end());
        CHECK(outer < prev);
        prev = outer;
    }
}

TEST_CASE("renderer rejects poses outside the frustum") {
    const PatternSpec spec;
    CHECK_THROWS_AS(render_frame({90.0, 0.0, 50.0}, spec, 64, 48, 1), std::invalid_argument);
    CHECK_THROWS_AS(render_frame({0.0, 0.0, -1.0}, spec, 64, 48, 1), std::invalid_argument);
    CHECK_THROWS_AS(render_frame({0.0, 0.0, 500.0}, spec, 64, 48, 1), std::invalid_argument);
}

TEST_CASE("pattern validation") {
    PatternSpec spec;
    spec.ring_radii_mm = {30.0, 25.0, 40.0, 50.0};  // not increasing
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = PatternSpec{};
    spec.dot_diameter_mm = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = PatternSpec{};
    spec.dash_count = {24, 28};  // wrong arity
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("elongation map interpolation") {
    const PlantConfig cfg;
    CHECK(map_elongation(cfg, -1.0) == cfg.elongation_map.front().second);
    CHECK(map_elongation(cfg, 1.0) == cfg.elongation_map.back().second);
    CHECK(map_elongation(cfg, 0.0015) == doctest::Approx(40.0));  // midpoint of (0.001,30)-(0.002,50)
    PlantConfig bad;
    bad.elongation_map = {{0.0, 0.0}, {0.001, 30.0}, {0.001, 50.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("plant equilibrium is a fixed point") {
    const PlantConfig cfg;
    PlantState s;
    s.pressure_bar = 0.002;
    s.z_mm = map_elongation(cfg, 0.002);
    const PlantState n = step_plant(s, s.pressure_bar, 0.01, cfg);
    CHECK(std::abs(n.pressure_bar - s.pressure_bar) < 1e-12);
    CHECK(std::abs(n.z_mm - s.z_mm) < 1e-12);
    CHECK(n.time_s == doctest::Approx(0.01));
}

TEST_CASE("pressure reaches a step command within 1% after five time constants") {
    const PlantConfig cfg;
    PlantState s;
    const double cmd = 0.02;
    const double dt = 1e-3;
    const int steps = static_cast<int>(std::lround(5.0 * cfg.pressure_time_constant_s / dt));
    for (int i = 0; i < steps; ++i) s = step_plant(s, cmd, dt, cfg);
    CHECK(std::abs(s.pressure_bar - cmd) / cmd < 0.01);
}

TEST_CASE("elongation converges monotonically to the map value") {
    PlantConfig cfg;
    cfg.elongation_map = {{0.0, 0.0}, {0.01, 100.0}};  // linear
    PlantState s;
    s.pressure_bar = 0.005;
    const double target = map_elongation(cfg, 0.005);
    double prev = s.z_mm;
    for (int i = 0; i < 400; ++i) {
        s = step_plant(s, s.pressure_bar, 0.01, cfg);
        CHECK(s.z_mm >= prev);
        prev = s.z_mm;
    }
    CHECK(std::abs(s.z_mm - target) < 0.01);
}

TEST_CASE("integrator error halves when dt halves") {
    const PlantConfig cfg;
    const auto run = [&](double dt, int steps) {
        PlantState s;
        s.pressure_bar = 0.0005;
        s.z_mm = 10.0;
        for (int i = 0; i < steps; ++i) s = step_plant(s, 0.004, dt, cfg);
        return s;
    };
    const PlantState a = run(0.02, 50);
    const PlantState b = run(0.01, 100);
    const PlantState c = run(0.005, 200);
    const double e1 = std::abs(a.z_mm - b.z_mm);
    const double e2 = std::abs(b.z_mm - c.z_mm);
    REQUIRE(e2 > 0.0);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 0.9);

    // Pressure settles much faster, so measure its order over a short horizon
    // where the transient is still alive.
    const auto run_p = [&](double dt, int steps) {
        PlantState s;
        s.pressure_bar = 0.0005;
        for (int i = 0; i < steps; ++i) s = step_plant(s, 0.004, dt, cfg);
        return s.pressure_bar;
    };
    const double pa = run_p(0.004, 50);
    const double pb = run_p(0.002, 100);
    const double pc = run_p(0.001, 200);
    const double p1 = std::abs(pa - pb);
    const double p2 = std::abs(pb - pc);
    REQUIRE(p2 > 0.0);
    CHECK(std::log2(p1 / p2) >= 0.9);
}

TEST_CASE("plant clamps command, pressure and elongation") {
    const PlantConfig cfg;
    PlantState s;
    for (int i = 0; i < 20000; ++i) s = step_plant(s, 10.0, 0.005, cfg);  // huge command
    CHECK(s.pressure_bar <= cfg.p_max_bar + 1e-12);
    CHECK(s.z_mm <= cfg.z_max_mm + 1e-12);
    CHECK_THROWS_AS(step_plant(s, 0.0, 0.0, cfg), std::invalid_argument);
}

TEST_CASE("distance sensor basics") {
    SUBCASE("on-axis readings are affine in z") {
        std::vector<double> raw, z;
        for (int i = 0; i < 40; ++i) {
            PlantState s;
            s.z_mm = 20.0 + 2.0 * i;
            raw.push_back(simulate_tof(s, 0.0, 1));
            z.push_back(s.z_mm);
        }
        const TofCalibration cal = calibrate_linear(raw, z);
        for (std::size_t i = 0; i < raw.size(); ++i)
            CHECK(std::abs(cal.apply(raw[i]) - z[i]) < 1e-9);
    }
    SUBCASE("reading grows with lateral offset at fixed z") {
        double prev = -1.0;
        for (int i = 0; i < 10; ++i) {
            PlantState s;
            s.z_mm = 50.0;
            s.x_mm = 2.0 * i;
            const double r = simulate_tof(s, 0.0, 1);
            CHECK(r > prev);
            prev = r;
        }
    }
    SUBCASE("noise is seeded") {
        PlantState s;
        s.z_mm = 50.0;
        CHECK(simulate_tof(s, 1.0, 5) == simulate_tof(s, 1.0, 5));
        CHECK(simulate_tof(s, 1.0, 5) != simulate_tof(s, 1.0, 6));
    }
}

TEST_CASE("linear calibration") {
    SUBCASE("identity data") {
        const std::vector<double> z{10.0, 20.0, 30.0, 40.0};
        const TofCalibration cal = calibrate_linear(z, z);
        CHECK(std::abs(cal.gain - 1.0) < 1e-9);
        CHECK(std::abs(cal.offset) < 1e-9);
    }
    SUBCASE("exact inverse affine") {
        std::vector<double> raw, z;
        for (int i = 0; i < 10; ++i) {
            z.push_back(5.0 * i);
            raw.push_back(2.0 * z.back() + 3.0);
        }
        const TofCalibration cal = calibrate_linear(raw, z);
        CHECK(cal.gain == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(cal.offset == doctest::Approx(-1.5).epsilon(1e-9));
    }
    SUBCASE("noisy data recovers truth within three standard errors") {
        const int n = 1000;
        const double gain = 0.9, offset = -12.0, sigma = 2.0;
        std::vector<double> raw(n), z(n);
        double mean_raw = 0.0;
        for (int i = 0; i < n; ++i) {
            raw[i] = 50.0 + 100.0 * uniform01(hash2(301, static_cast<std::uint64_t>(i)));
            z[i] = gain * raw[i] + offset + sigma * normal01(hash2(302, static_cast<std::uint64_t>(i)));
            mean_raw += raw[i];
        }
        mean_raw /= n;
        double srr = 0.0;
        for (int i = 0; i < n; ++i) srr += (raw[i] - mean_raw) * (raw[i] - mean_raw);
        const TofCalibration cal = calibrate_linear(raw, z);
        const double se_gain = sigma / std::sqrt(srr);
        const double se_offset = sigma * std::sqrt(1.0 / n + mean_raw * mean_raw / srr);
        CHECK(std::abs(cal.gain - gain) < 3.0 * se_gain);
        CHECK(std::abs(cal.offset - offset) < 3.0 * se_offset);
    }
    SUBCASE("degenerate inputs") {
        CHECK_THROWS_AS(calibrate_linear({1.0}, {1.0}), std::invalid_argument);
        CHECK_THROWS_AS(calibrate_linear({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(calibrate_linear({1.0, 2.0}, {1.0}), std::invalid_argument);
    }
}

TEST_CASE("lateral disturbance degrades a z-only calibration") {
    Workspace ws;
    ws.x_min = ws.x_max = ws.y_min = ws.y_max = 0.0;  // pure-z trajectories
    const GenConfig gen;
    const double sigma = 0.5;

    const auto sweep = [&](std::uint64_t seed, double lateral_amp, std::vector<double>& raw,
                           std::vector<double>& z) {
        DisturbanceSpec dist;
        dist.amplitude_mm = lateral_amp;
        for (int i = 0; i < 400; ++i) {
            const double t = i / gen.rate_hz;
            PlantState s;
            s.z_mm = trajectory_pose(t, ws, gen, seed).z;
            const auto [x, y] = disturbance_xy(dist, t);
            s.x_mm = x;
            s.y_mm = y;
            raw.push_back(simulate_tof(s, sigma, hash2(seed, static_cast<std::uint64_t>(i))));
            z.push_back(s.z_mm);
        }
    };

    std::vector<double> raw_cal, z_cal;
    sweep(1, 0.0, raw_cal, z_cal);
    const TofCalibration cal = calibrate_linear(raw_cal, z_cal);

    std::vector<double> raw_u, z_u, raw_d, z_d;
    sweep(2, 0.0, raw_u, z_u);
    sweep(2, 12.0, raw_d, z_d);
    std::vector<double> est_u, est_d;
    for (double r : raw_u) est_u.push_back(cal.apply(r));
    for (double r : raw_d) est_d.push_back(cal.apply(r));
    const double rmse_u = rmse(est_u, z_u);
    const double rmse_d = rmse(est_d, z_d);
    CHECK(rmse_d > rmse_u);
}

TEST_CASE("excitation trajectory stays inside the workspace") {
    const Workspace ws;
    const GenConfig gen;
    for (int i = 0; i < 1000000; ++i) {
        const Pose p = trajectory_pose(i * 0.01, ws, gen, 9);
        REQUIRE(ws.contains(p));
    }
}

TEST_CASE("generated datasets are reproducible and persistable") {
    Workspace ws;
    const PatternSpec spec;
    GenConfig gen;
    gen.width = 64;
    gen.height = 48;
    const Dataset ds = generate_dataset(6, ws, spec, gen, 17);

    CHECK(ds.samples.size() == 6);
    CHECK(ds.meta.width == 64);
    CHECK(ds.meta.seed == 17);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(ws.contains(ds.samples[i].pose));
        CHECK(ds.samples[i].timestamp == doctest::Approx(0.1 * static_cast<double>(i)));
    }

    const Dataset again = generate_dataset(6, ws, spec, gen, 17);
    CHECK(dataset_hash(ds) == dataset_hash(again));
    const Dataset other = generate_dataset(6, ws, spec, gen, 18);
    CHECK(dataset_hash(ds) != dataset_hash(other));

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "proprio_plant_ds";
    fs::remove_all(dir);
    save_dataset(ds, dir.string());
    const Dataset back = load_dataset(dir.string());
    CHECK(dataset_hash(ds) == dataset_hash(back));
    fs::remove_all(dir);

    CHECK_THROWS_AS(generate_dataset(0, ws, spec, gen, 1), std::invalid_argument);
    Workspace bad;
    bad.z_min = 50.0;
    bad.z_max = 20.0;
    CHECK_THROWS_AS(generate_dataset(5, bad, spec, gen, 1), std::invalid_argument);
}

TEST_CASE("features distinguish poses separated by 1 mm in z") {
    const PatternSpec spec;
    const FilterConfig fc;
    for (int k = 0; k < 100; ++k) {
        const auto ku = static_cast<std::uint64_t>(k);
        const double z1 = 20.0 + 70.0 * uniform01(hash2(401, ku));
        const double z2 = z1 + 1.0 + 9.0 * uniform01(hash2(402, ku));
        const double x = -15.0 + 30.0 * uniform01(hash2(403, ku));
        const double y = -15.0 + 30.0 * uniform01(hash2(404, ku));
        const FeatureVector a =
            extract_features(render_frame({x, y, z1}, spec, 160, 120, 7), fc, 3);
        const FeatureVector b =
            extract_features(render_frame({x, y, z2}, spec, 160, 120, 7), fc, 3);
        double d2 = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i)
            d2 += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
        REQUIRE(d2 > 0.0);
    }
}
