#pragma once

#include <functional>

#include "camse/autodiff.hpp"
#include "camse/nn.hpp"

namespace camse {

// Compares reverse-mode gradients against central finite differences
// (f(p + eps) - f(p - eps)) / 2eps for every parameter coordinate and
// returns the max of |a - n| / max(|a|, |n|, 1e-8).
//
// f must rebuild its graph from the current parameter values on each call
// and be deterministic; a non-deterministic f (e.g. live dropout) is
// rejected as an invalid check.
double grad_check(const std::function<Var(Tape*)>& f, ParamStore& params, double eps = 1e-5);

}  // namespace camse
