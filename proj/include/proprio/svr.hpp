#pragma once

// Epsilon-insensitive support vector regression with an RBF kernel, trained
// by a two-coordinate SMO solver with maximal-violating-pair selection.
// Three independent regressors (x, y, z) make up a PoseModel.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "proprio/features.hpp"
#include "proprio/image.hpp"
#include "proprio/pose.hpp"

namespace proprio {

enum class Axis { x = 0, y = 1, z = 2 };

struct SvrHyperparams {
    double epsilon = 0.0;  // insensitive-tube half width, target units (mm)
    double cost = 1.0;     // K: loss weight = dual box bound
    double gamma = 1.0;    // RBF width, exp(-gamma * ||a-b||^2)

    void validate() const;
    bool operator==(const SvrHyperparams&) const = default;
};

/// Shipped defaults for S=3 (x, y, z order).
constexpr std::array<SvrHyperparams, 3> default_hyperparams() {
    return {SvrHyperparams{0.96, 112.5, 0.060}, SvrHyperparams{0.96, 112.5, 0.060},
            SvrHyperparams{1.00, 189.0, 0.005}};
}

struct SvrModel {
    std::vector<std::vector<double>> support_vectors;  // normalized feature space
    std::vector<double> dual_coefs;                    // alpha_i - alpha_i^*, same order
    double bias = 0.0;
    SvrHyperparams hyperparams;
    Normalizer normalizer;  // the feature normalizer this model expects
    Axis axis = Axis::z;
};

/// Optional diagnostics filled by train_svr.
struct SvrTrainInfo {
    long long iterations = 0;
    double kkt_gap = 0.0;
    double objective = 0.0;  // dual objective (maximization form) at the solution
    int support_count = 0;
};

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma);

/// Trains on already-normalized features; targets stay in mm. Throws
/// std::runtime_error carrying the final KKT violation if max_iter is hit.
SvrModel train_svr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   const SvrHyperparams& hp, double tol = 1e-3, long long max_iter = 1000000,
                   SvrTrainInfo* info = nullptr);

double predict(const SvrModel& m, const std::vector<double>& mu_norm);

struct PoseModel {
    SvrModel model_x, model_y, model_z;
    int s = 3;
    int image_width = 0;   // training frame size; predict_pose enforces it
    int image_height = 0;
    FilterConfig filter_config;
    std::string block_order = kBlockOrder;

    const Normalizer& normalizer() const { return model_z.normalizer; }
};

PosePrediction predict_pose(const PoseModel& pm, const GrayImage& g, const AxesMask& mask = {});

// ---------------------------------------------------------------------------
// Grid-search cross-validation.
// ---------------------------------------------------------------------------

struct CvRow {
    Axis axis;
    SvrHyperparams hp;
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;
};

struct CvResult {
    std::array<SvrHyperparams, 3> best;  // per axis, x/y/z
    std::vector<CvRow> rows;
    std::uint64_t seed = 0;
    int folds = 0;
};

/// Seeded shuffle, contiguous folds, per-axis mean validation RMSE per grid
/// point; argmin with ties broken toward smaller cost, then smaller gamma,
/// then larger epsilon.
CvResult cross_validate(const std::vector<std::vector<double>>& x,
                        const std::array<std::vector<double>, 3>& targets,
                        const std::vector<SvrHyperparams>& grid, int folds = 5,
                        std::uint64_t seed = 1, double tol = 1e-3,
                        long long max_iter = 1000000);

}  // namespace proprio
