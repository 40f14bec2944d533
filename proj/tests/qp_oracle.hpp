#pragma once

// Test-side oracle for the SVR dual: plain projected gradient descent on the
// 2n-variable box QP with the equality constraint handled by an exact
// bisection projection. Slow and simple on purpose — it shares no code with
// the SMO solver it checks.

#include <cstdint>
#include <vector>

#include "proprio/svr.hpp"

namespace oracle {

struct Result {
    std::vector<double> alpha;       // up-side box variables
    std::vector<double> alpha_star;  // down-side box variables
    std::vector<double> beta;        // alpha - alpha*
    double bias = 0.0;
    double objective = 0.0;  // dual objective, maximization form
};

Result solve(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
             const proprio::SvrHyperparams& hp, long long iters = 1000000);

double predict(const std::vector<std::vector<double>>& x, const Result& r,
               const std::vector<double>& probe, double gamma);

}  // namespace oracle
