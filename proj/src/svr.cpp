#include "proprio/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "proprio/filters.hpp"
#include "proprio/util.hpp"

namespace proprio {

void SvrHyperparams::validate() const {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("svr: epsilon must be >= 0");
    if (!(cost > 0.0)) throw std::invalid_argument("svr: cost must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("svr: gamma must be > 0");
}

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
    if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: length mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

namespace {

// Kernel rows for the solver: the full symmetric Gram matrix at desk scale,
// an LRU row cache beyond it.
class KernelCache {
  public:
    static constexpr std::size_t kFullLimit = 10000;

    KernelCache(const std::vector<std::vector<double>>& x, double gamma)
        : x_(x), gamma_(gamma), n_(x.size()) {
        norms_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (double v : x_[i]) s += v * v;
            norms_[i] = s;
        }
        if (n_ <= kFullLimit) {
            full_.resize(n_ * n_);
            const long long nn = static_cast<long long>(n_);
#pragma omp parallel for schedule(dynamic, 16)
            for (long long i = 0; i < nn; ++i) {
                for (long long j = i; j < nn; ++j) {
                    const double k = eval(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                    full_[static_cast<std::size_t>(i) * n_ + j] = k;
                    full_[static_cast<std::size_t>(j) * n_ + i] = k;
                }
            }
        } else {
            // Rows are large; cap the cache at ~512 MB but keep at least the
            // two rows a single SMO step touches.
            capacity_ = std::max<std::size_t>(2, (512ull << 20) / (n_ * sizeof(double)));
        }
    }

    const double* row(std::size_t i) {
        if (!full_.empty()) return &full_[i * n_];
        if (auto it = cached_.find(i); it != cached_.end()) {
            order_.splice(order_.begin(), order_, it->second.second);
            return it->second.first->data();
        }
        auto r = std::make_shared<std::vector<double>>(n_);
        for (std::size_t j = 0; j < n_; ++j) (*r)[j] = eval(i, j);
        pinned_.push_back(r);  // keep alive for callers across one more fetch
        if (pinned_.size() > 4) pinned_.erase(pinned_.begin());
        order_.push_front(i);
        cached_[i] = {r, order_.begin()};
        while (cached_.size() > capacity_) {
            cached_.erase(order_.back());
            order_.pop_back();
        }
        return r->data();
    }

    std::size_t size() const { return n_; }

  private:
    double eval(std::size_t i, std::size_t j) const {
        double dot = 0.0;
        const auto& a = x_[i];
        const auto& b = x_[j];
        for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
        const double d2 = std::max(0.0, norms_[i] + norms_[j] - 2.0 * dot);
        return std::exp(-gamma_ * d2);
    }

    const std::vector<std::vector<double>>& x_;
    double gamma_;
    std::size_t n_;
    std::vector<double> norms_;
    std::vector<double> full_;
    std::size_t capacity_ = 0;
    std::unordered_map<std::size_t,
                       std::pair<std::shared_ptr<std::vector<double>>, std::list<std::size_t>::iterator>>
        cached_;
    std::list<std::size_t> order_;
    std::vector<std::shared_ptr<std::vector<double>>> pinned_;
};

}  // namespace

SvrModel train_svr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                   const SvrHyperparams& hp, double tol, long long max_iter, SvrTrainInfo* info) {
    hp.validate();
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("train_svr: need at least 2 samples");
    if (y.size() != n) throw std::invalid_argument("train_svr: |x| != |y|");
    const std::size_t dim = x.front().size();
    for (const auto& v : x)
        if (v.size() != dim) throw std::invalid_argument("train_svr: inconsistent feature lengths");
    if (!(tol > 0.0)) throw std::invalid_argument("train_svr: tol must be > 0");

    const double c = hp.cost, eps = hp.epsilon;
    KernelCache cache(x, hp.gamma);

    // State of the 2n-variable box QP: alpha (up side), alpha* (down side),
    // their difference beta, and f = K beta maintained incrementally.
    std::vector<double> alpha(n, 0.0), alpha_star(n, 0.0), beta(n, 0.0), f(n, 0.0);

    long long iter = 0;
    double gap = std::numeric_limits<double>::infinity();
    double up_best = 0.0, low_best = 0.0;
    for (;;) {
        // Maximal violating pair over the box-feasible directions.
        double up = -std::numeric_limits<double>::infinity();
        double low = std::numeric_limits<double>::infinity();
        std::size_t pi = n, pj = n;
        bool i_star = false, j_star = false;
        for (std::size_t p = 0; p < n; ++p) {
            const double vm = y[p] - f[p] - eps;  // alpha-side KKT value
            const double vs = vm + 2.0 * eps;     // alpha*-side KKT value
            if (alpha[p] < c && vm > up) {
                up = vm;
                pi = p;
                i_star = false;
            }
            if (alpha_star[p] > 0.0 && vs > up) {
                up = vs;
                pi = p;
                i_star = true;
            }
            if (alpha[p] > 0.0 && vm < low) {
                low = vm;
                pj = p;
                j_star = false;
            }
            if (alpha_star[p] < c && vs < low) {
                low = vs;
                pj = p;
                j_star = true;
            }
        }
        gap = up - low;
        up_best = up;
        low_best = low;
        if (gap < tol) break;
        if (iter >= max_iter) {
            std::ostringstream msg;
            msg << "train_svr: no convergence after " << max_iter
                << " iterations, kkt violation " << gap << " (tol " << tol << ")";
            throw std::runtime_error(msg.str());
        }

        const double* kp = cache.row(pi);
        const double* kq = cache.row(pj);
        double quad = kp[pi] + kq[pj] - 2.0 * kp[pj];
        if (quad < 1e-12) quad = 1e-12;

        // Headroom of each endpoint along its feasible direction.
        const double hi = i_star ? alpha_star[pi] : c - alpha[pi];
        const double hj = j_star ? c - alpha_star[pj] : alpha[pj];
        const double step = std::min(gap / quad, std::min(hi, hj));

        if (i_star)
            alpha_star[pi] = std::max(0.0, alpha_star[pi] - step);
        else
            alpha[pi] = std::min(c, alpha[pi] + step);
        if (j_star)
            alpha_star[pj] = std::min(c, alpha_star[pj] + step);
        else
            alpha[pj] = std::max(0.0, alpha[pj] - step);
        beta[pi] = alpha[pi] - alpha_star[pi];
        beta[pj] = alpha[pj] - alpha_star[pj];

        for (std::size_t p = 0; p < n; ++p) f[p] += step * (kp[p] - kq[p]);
        ++iter;
    }

    // Bias from the KKT values of free support vectors; when none are free
    // every value in [low, up] is admissible, so take the midpoint.
    const double bound_margin = 1e-10 * c;
    double bias_sum = 0.0;
    int free_count = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (alpha[p] > bound_margin && alpha[p] < c - bound_margin) {
            bias_sum += y[p] - f[p] - eps;
            ++free_count;
        }
        if (alpha_star[p] > bound_margin && alpha_star[p] < c - bound_margin) {
            bias_sum += y[p] - f[p] + eps;
            ++free_count;
        }
    }
    const double bias = free_count > 0 ? bias_sum / free_count : 0.5 * (up_best + low_best);

    SvrModel m;
    m.hyperparams = hp;
    m.bias = bias;
    for (std::size_t p = 0; p < n; ++p) {
        if (beta[p] != 0.0) {
            m.support_vectors.push_back(x[p]);
            m.dual_coefs.push_back(beta[p]);
        }
    }

    if (info) {
        info->iterations = iter;
        info->kkt_gap = gap;
        info->support_count = static_cast<int>(m.dual_coefs.size());
        // Dual objective in maximization form. With eps*2 >= tol the solver
        // cannot converge with both alpha sides positive, so alpha + alpha*
        // reduces to |beta|.
        double obj = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            if (beta[p] == 0.0) continue;
            const double* kp = cache.row(p);
            double kf = 0.0;
            for (std::size_t q = 0; q < n; ++q) kf += kp[q] * beta[q];
            obj += y[p] * beta[p] - eps * std::abs(beta[p]) - 0.5 * beta[p] * kf;
        }
        info->objective = obj;
    }
    return m;
}

double predict(const SvrModel& m, const std::vector<double>& mu_norm) {
    double acc = m.bias;
    const double gamma = m.hyperparams.gamma;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
        const auto& sv = m.support_vectors[i];
        if (sv.size() != mu_norm.size()) throw std::invalid_argument("predict: length mismatch");
        double d2 = 0.0;
        for (std::size_t k = 0; k < sv.size(); ++k) {
            const double d = sv[k] - mu_norm[k];
            d2 += d * d;
        }
        acc += m.dual_coefs[i] * std::exp(-gamma * d2);
    }
    return acc;
}

PosePrediction predict_pose(const PoseModel& pm, const GrayImage& g, const AxesMask& mask) {
    if (g.width != pm.image_width || g.height != pm.image_height)
        throw std::invalid_argument("predict_pose: image dimensions do not match the model");
    const FeatureVector mu = extract_features(g, pm.filter_config, pm.s);
    const FeatureVector z = normalize(mu, pm.normalizer());
    PosePrediction out;
    if (mask.x) out.x = predict(pm.model_x, z.values);
    if (mask.y) out.y = predict(pm.model_y, z.values);
    if (mask.z) out.z = predict(pm.model_z, z.values);
    return out;
}

CvResult cross_validate(const std::vector<std::vector<double>>& x,
                        const std::array<std::vector<double>, 3>& targets,
                        const std::vector<SvrHyperparams>& grid, int folds, std::uint64_t seed,
                        double tol, long long max_iter) {
    if (grid.empty()) throw std::invalid_argument("cross_validate: empty grid");
    const std::size_t n = x.size();
    if (folds < 2) throw std::invalid_argument("cross_validate: folds must be >= 2");
    if (n < static_cast<std::size_t>(folds))
        throw std::invalid_argument("cross_validate: dataset smaller than fold count");
    for (const auto& t : targets)
        if (t.size() != n) throw std::invalid_argument("cross_validate: target length mismatch");

    const std::vector<int> order = shuffled_indices(n, seed);
    auto fold_range = [&](int f) {
        return std::pair<std::size_t, std::size_t>{n * static_cast<std::size_t>(f) / folds,
                                                   n * static_cast<std::size_t>(f + 1) / folds};
    };

    CvResult result;
    result.seed = seed;
    result.folds = folds;
    for (int axis = 0; axis < 3; ++axis) {
        const std::vector<double>& y = targets[static_cast<std::size_t>(axis)];
        std::size_t best_row = 0;
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            CvRow row;
            row.axis = static_cast<Axis>(axis);
            row.hp = grid[gi];
            double total = 0.0;
            for (int fold = 0; fold < folds; ++fold) {
                const auto [v0, v1] = fold_range(fold);
                std::vector<std::vector<double>> xt;
                std::vector<double> yt;
                xt.reserve(n - (v1 - v0));
                yt.reserve(n - (v1 - v0));
                for (std::size_t k = 0; k < n; ++k) {
                    if (k >= v0 && k < v1) continue;
                    xt.push_back(x[static_cast<std::size_t>(order[k])]);
                    yt.push_back(y[static_cast<std::size_t>(order[k])]);
                }
                const SvrModel m = train_svr(xt, yt, grid[gi], tol, max_iter);
                double se = 0.0;
                for (std::size_t k = v0; k < v1; ++k) {
                    const double e = predict(m, x[static_cast<std::size_t>(order[k])]) -
                                     y[static_cast<std::size_t>(order[k])];
                    se += e * e;
                }
                row.fold_rmse.push_back(std::sqrt(se / static_cast<double>(v1 - v0)));
                total += row.fold_rmse.back();
            }
            row.mean_rmse = total / folds;
            result.rows.push_back(row);

            const auto key = [](const CvRow& r) {
                return std::make_tuple(r.mean_rmse, r.hp.cost, r.hp.gamma, -r.hp.epsilon);
            };
            const std::size_t first_of_axis = result.rows.size() - gi - 1;
            if (key(result.rows.back()) < key(result.rows[first_of_axis + best_row])) best_row = gi;
        }
        const std::size_t first_of_axis = result.rows.size() - grid.size();
        result.best[static_cast<std::size_t>(axis)] = result.rows[first_of_axis + best_row].hp;
    }
    return result;
}

}  // namespace proprio
