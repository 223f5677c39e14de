#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rgvae/tensor.hpp"

namespace rgvae {

// Scalar-valued tensor function over a fixed list of inputs. Must be pure:
// the same point has to produce the same value on every call.
using TensorFn = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares reverse-mode gradients against central finite differences and
// returns the max over coordinates of |analytic - numeric| /
// max(|analytic|, |numeric|, 1e-8).
double check_gradients(const TensorFn& f, std::vector<Tensor> point, double h = 1e-5);

struct GradCheckResult {
    std::string name;
    double max_rel_error;
    bool ok(double tol = 1e-4) const { return max_rel_error < tol; }
};

// Built-in finite-difference suite over every differentiable op and both
// RGVAE loss variants (permutation frozen). Used by the `gradcheck` CLI
// command and by the test suites.
std::vector<GradCheckResult> run_gradcheck_suite(uint64_t seed = 12345);

}  // namespace rgvae
