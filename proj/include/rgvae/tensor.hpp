#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rgvae/errors.hpp"
#include "rgvae/random.hpp"

namespace rgvae {

using Shape = std::vector<size_t>;

std::string shape_str(const Shape& s);
size_t shape_numel(const Shape& s);

namespace autograd {

// One node of the recorded computation. Leaves carry no backprop function;
// their grad buffers are what the optimizer reads.
struct Node {
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const std::vector<double>& out_grad)> backprop;
    std::vector<double> grad;
    size_t numel = 0;

    void ensure_grad() {
        if (grad.size() != numel) grad.assign(numel, 0.0);
    }
};

bool grad_enabled();

// Disables graph recording in its scope (inference / finite differences).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();

private:
    bool prev_;
};

}  // namespace autograd

// Dense row-major tensor of doubles with optional reverse-mode tracking.
// Values are immutable once created; parameter leaves are the one exception
// (the optimizer updates them in place between recorded steps).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    static Tensor from(Shape shape, std::vector<double> data);
    static Tensor scalar(double v);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }

    // Leaf with gradient tracking, sharing this tensor's storage.
    Tensor leaf() const;

    const Shape& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t dim(size_t i) const { return shape_[i]; }
    size_t numel() const { return data_ ? data_->size() : 0; }
    bool defined() const { return data_ != nullptr; }

    const std::vector<double>& data() const { return *data_; }
    std::vector<double>& mutable_data() { return *data_; }

    double value() const;  // scalar convenience
    double operator()(size_t i) const { return (*data_)[i]; }
    double at(size_t i, size_t j) const { return (*data_)[i * shape_[1] + j]; }
    double at(size_t i, size_t j, size_t k) const {
        return (*data_)[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool requires_grad() const { return node_ != nullptr; }
    bool is_leaf() const { return node_ && !node_->backprop; }
    const std::vector<double>& grad() const;
    void zero_grad();

    std::shared_ptr<autograd::Node> node() const { return node_; }

    // Internal: wraps an op result with its node.
    static Tensor make_tracked(Shape shape, std::vector<double> data,
                               std::shared_ptr<autograd::Node> node);

private:
    Shape shape_;
    std::shared_ptr<std::vector<double>> data_;
    std::shared_ptr<autograd::Node> node_;
};

// ---- forward ops (each records a backward closure when tracking is on) ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);  // same shape, or rank-1 b broadcast over last axis
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax_lastdim(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor sum(const Tensor& a);           // -> scalar
Tensor mean(const Tensor& a);          // -> scalar
Tensor sum_lastdim(const Tensor& a);   // drops the last axis
Tensor reshape(const Tensor& a, Shape shape);
Tensor flatten(const Tensor& a);       // -> rank 1
Tensor concat(const std::vector<Tensor>& parts, size_t axis);  // rank 1/2, axis 0 or 1
Tensor slice_lastdim(const Tensor& a, size_t from, size_t to);
Tensor dropout(const Tensor& a, double p, bool training, Rng& rng);

// out[i] = a.flat[indices[i]] — constant index map, scatter-add backward.
Tensor gather(const Tensor& a, const std::vector<size_t>& indices, Shape out_shape);
// Row gather for rank-2 tables (embedding lookup).
Tensor rows(const Tensor& table, const std::vector<int32_t>& row_ids);
// Sums a rank-1 tensor into n_seg buckets by constant segment id.
Tensor segment_sum(const Tensor& a, const std::vector<size_t>& seg_ids, size_t n_seg);

// Reverse pass from a scalar loss. Each reachable node is processed exactly
// once; leaf grads accumulate (call zero_grad between steps).
void backward(const Tensor& loss);

}  // namespace rgvae
