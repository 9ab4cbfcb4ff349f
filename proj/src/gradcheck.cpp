#include "camse/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "camse/errors.hpp"

namespace camse {

double grad_check(const std::function<Var(Tape*)>& f, ParamStore& params, double eps) {
    const double probe1 = f(nullptr).value().item();
    const double probe2 = f(nullptr).value().item();
    if (std::memcmp(&probe1, &probe2, sizeof(double)) != 0) {
        throw StateError("grad_check: function is not deterministic, check is invalid");
    }

    params.zero_grads();
    Tape tape;
    Var loss = f(&tape);
    tape.backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params.at(i).grad());

    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& value = params.at(i).value_mut();
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double orig = value[j];
            value[j] = orig + eps;
            const double up = f(nullptr).value().item();
            value[j] = orig - eps;
            const double down = f(nullptr).value().item();
            value[j] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[i][j];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace camse
