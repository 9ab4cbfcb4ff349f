#include "camse/optim.hpp"

#include <cmath>

#include "camse/errors.hpp"

namespace camse {

double Adam::effective_lr() const { return cfg_.lr * std::pow(cfg_.decay, epoch_); }

void Adam::step(ParamStore& params) {
    if (t_ == 0) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_.push_back(Tensor::zeros_like(params.at(i).value()));
            v_.push_back(Tensor::zeros_like(params.at(i).value()));
        }
    } else {
        if (m_.size() != params.size()) {
            throw StateError("adam state holds " + std::to_string(m_.size()) +
                             " parameters, got " + std::to_string(params.size()));
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!m_[i].same_shape(params.at(i).value())) {
                throw StateError("adam state shape mismatch for parameter " + params.name(i));
            }
        }
    }
    ++t_;
    const double lr = effective_lr();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& value = params.at(i).value_mut();
        const Tensor& grad = params.at(i).grad();
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j];
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            value[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace camse
