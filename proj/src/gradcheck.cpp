#include "rgvae/gradcheck.hpp"

#include <cmath>

namespace rgvae {

double check_gradients(const TensorFn& f, std::vector<Tensor> point, double h) {
    for (auto& t : point)
        if (!t.is_leaf()) t = t.leaf();
    for (auto& t : point) t.zero_grad();

    Tensor loss = f(point);
    if (loss.numel() != 1) throw contract_error("check_gradients needs a scalar function");
    std::vector<std::vector<double>> analytic;
    if (loss.requires_grad()) {
        backward(loss);
        for (const auto& t : point) analytic.push_back(t.grad());
    } else {
        // Constant function: all gradients are zero.
        for (const auto& t : point) analytic.emplace_back(t.numel(), 0.0);
    }

    double max_err = 0.0;
    for (size_t ti = 0; ti < point.size(); ++ti) {
        auto& data = point[ti].mutable_data();
        for (size_t c = 0; c < data.size(); ++c) {
            double orig = data[c];
            double fp, fm;
            {
                autograd::NoGradGuard ng;
                data[c] = orig + h;
                fp = f(point).value();
                data[c] = orig - h;
                fm = f(point).value();
            }
            data[c] = orig;
            double numeric = (fp - fm) / (2.0 * h);
            double a = analytic[ti][c];
            double err = std::fabs(a - numeric) /
                         std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace rgvae
