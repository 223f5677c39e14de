#include "rgvae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rgvae {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
}

namespace autograd {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

}  // namespace autograd

using autograd::Node;

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(shape_numel(shape_), fill)) {}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != data.size())
        throw shape_error("data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::make_shared<std::vector<double>>(std::move(data));
    return t;
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::leaf() const {
    Tensor t = *this;
    auto node = std::make_shared<Node>();
    node->numel = numel();
    t.node_ = std::move(node);
    return t;
}

double Tensor::value() const {
    if (numel() != 1) throw contract_error("value() on non-scalar tensor " + shape_str(shape_));
    return (*data_)[0];
}

const std::vector<double>& Tensor::grad() const {
    if (!node_) throw contract_error("grad() on tensor without gradient tracking");
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) node_->grad.assign(node_->numel, 0.0);
}

Tensor Tensor::make_tracked(Shape shape, std::vector<double> data,
                            std::shared_ptr<Node> node) {
    Tensor t = from(std::move(shape), std::move(data));
    t.node_ = std::move(node);
    return t;
}

namespace {

bool track(std::initializer_list<const Tensor*> ins) {
    if (!autograd::grad_enabled()) return false;
    for (const Tensor* t : ins)
        if (t->requires_grad()) return true;
    return false;
}

// Pointer to the accumulation buffer of a parent, or nullptr if untracked.
std::vector<double>* grad_of(const Tensor& t) {
    if (!t.requires_grad()) return nullptr;
    t.node()->ensure_grad();
    return &t.node()->grad;
}

Tensor tracked(Shape shape, std::vector<double> out,
               std::initializer_list<const Tensor*> parents,
               std::function<void(const std::vector<double>&)> backprop) {
    auto node = std::make_shared<Node>();
    node->numel = out.size();
    for (const Tensor* p : parents)
        if (p->requires_grad()) node->parents.push_back(p->node());
    node->backprop = std::move(backprop);
    return Tensor::make_tracked(std::move(shape), std::move(out), std::move(node));
}

std::shared_ptr<std::vector<double>> copy_data(const Tensor& t) {
    return std::make_shared<std::vector<double>>(t.data());
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    size_t batch = 1, m = 0, k = 0, n = 0;
    bool a_batched = false, b_batched = false;
    if (sa.size() == 2 && sb.size() == 2) {
        m = sa[0]; k = sa[1]; n = sb[1];
        if (sb[0] != k) throw shape_error("matmul " + shape_str(sa) + " x " + shape_str(sb));
    } else if (sa.size() == 3 && sb.size() == 2) {
        batch = sa[0]; m = sa[1]; k = sa[2]; n = sb[1];
        a_batched = true;
        if (sb[0] != k) throw shape_error("matmul " + shape_str(sa) + " x " + shape_str(sb));
    } else if (sa.size() == 3 && sb.size() == 3) {
        batch = sa[0]; m = sa[1]; k = sa[2]; n = sb[2];
        a_batched = b_batched = true;
        if (sb[0] != batch || sb[1] != k)
            throw shape_error("matmul " + shape_str(sa) + " x " + shape_str(sb));
    } else {
        throw shape_error("matmul ranks " + shape_str(sa) + " x " + shape_str(sb));
    }

    Shape out_shape = a_batched ? Shape{batch, m, n} : Shape{m, n};
    std::vector<double> out(batch * m * n, 0.0);
    for (size_t g = 0; g < batch; ++g) {
        const double* pa = a.data().data() + (a_batched ? g * m * k : 0);
        const double* pb = b.data().data() + (b_batched ? g * k * n : 0);
        double* po = out.data() + g * m * n;
        for (size_t i = 0; i < m; ++i)
            for (size_t kk = 0; kk < k; ++kk) {
                double av = pa[i * k + kk];
                if (av == 0.0) continue;
                const double* brow = pb + kk * n;
                double* orow = po + i * n;
                for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
    }
    if (!track({&a, &b})) return Tensor::from(std::move(out_shape), std::move(out));

    auto da = copy_data(a);
    auto db = copy_data(b);
    auto* ga = grad_of(a);
    auto* gb = grad_of(b);
    return tracked(std::move(out_shape), std::move(out), {&a, &b},
                   [=](const std::vector<double>& og) {
                       for (size_t g = 0; g < batch; ++g) {
                           const double* pa = da->data() + (a_batched ? g * m * k : 0);
                           const double* pb = db->data() + (b_batched ? g * k * n : 0);
                           const double* po = og.data() + g * m * n;
                           if (ga) {
                               double* pga = ga->data() + (a_batched ? g * m * k : 0);
                               // dA = dOut * B^T
                               for (size_t i = 0; i < m; ++i)
                                   for (size_t kk = 0; kk < k; ++kk) {
                                       double acc = 0.0;
                                       const double* orow = po + i * n;
                                       const double* brow = pb + kk * n;
                                       for (size_t j = 0; j < n; ++j) acc += orow[j] * brow[j];
                                       pga[i * k + kk] += acc;
                                   }
                           }
                           if (gb) {
                               double* pgb = gb->data() + (b_batched ? g * k * n : 0);
                               // dB = A^T * dOut
                               for (size_t kk = 0; kk < k; ++kk)
                                   for (size_t i = 0; i < m; ++i) {
                                       double av = pa[i * k + kk];
                                       if (av == 0.0) continue;
                                       const double* orow = po + i * n;
                                       double* brow = pgb + kk * n;
                                       for (size_t j = 0; j < n; ++j) brow[j] += av * orow[j];
                                   }
                           }
                       }
                   });
}

Tensor add(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    std::vector<double> out = a.data();
    bool broadcast = false;
    if (sa == sb) {
        for (size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
    } else if (sb.size() == 1 && !sa.empty() && sa.back() == sb[0]) {
        broadcast = true;
        size_t n = sb[0];
        for (size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i % n];
    } else {
        throw shape_error("add " + shape_str(sa) + " + " + shape_str(sb));
    }
    if (!track({&a, &b})) return Tensor::from(sa, std::move(out));

    auto* ga = grad_of(a);
    auto* gb = grad_of(b);
    size_t bn = b.numel();
    return tracked(sa, std::move(out), {&a, &b}, [=](const std::vector<double>& og) {
        if (ga)
            for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i];
        if (gb) {
            if (!broadcast)
                for (size_t i = 0; i < og.size(); ++i) (*gb)[i] += og[i];
            else
                for (size_t i = 0; i < og.size(); ++i) (*gb)[i % bn] += og[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw shape_error("mul " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    if (!track({&a, &b})) return Tensor::from(a.shape(), std::move(out));

    auto da = copy_data(a);
    auto db = copy_data(b);
    auto* ga = grad_of(a);
    auto* gb = grad_of(b);
    return tracked(a.shape(), std::move(out), {&a, &b}, [=](const std::vector<double>& og) {
        if (ga)
            for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i] * (*db)[i];
        if (gb)
            for (size_t i = 0; i < og.size(); ++i) (*gb)[i] += og[i] * (*da)[i];
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i] * c;
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + c;
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i];
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto x = copy_data(a);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i)
            if ((*x)[i] > 0.0) (*ga)[i] += og[i];
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) {
        double x = a.data()[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                          : std::exp(x) / (1.0 + std::exp(x));
    }
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto y = std::make_shared<std::vector<double>>(out);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i)
            (*ga)[i] += og[i] * (*y)[i] * (1.0 - (*y)[i]);
    });
}

Tensor softmax_lastdim(const Tensor& a) {
    if (a.rank() == 0) throw shape_error("softmax on empty tensor");
    size_t n = a.shape().back();
    size_t nrows = a.numel() / n;
    std::vector<double> out(a.numel());
    for (size_t r = 0; r < nrows; ++r) {
        const double* in = a.data().data() + r * n;
        double* o = out.data() + r * n;
        double mx = in[0];
        for (size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
        double z = 0.0;
        for (size_t j = 0; j < n; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (size_t j = 0; j < n; ++j) o[j] /= z;
    }
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto y = std::make_shared<std::vector<double>>(out);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t r = 0; r < nrows; ++r) {
            const double* yo = y->data() + r * n;
            const double* go = og.data() + r * n;
            double dot = 0.0;
            for (size_t j = 0; j < n; ++j) dot += go[j] * yo[j];
            double* g = ga->data() + r * n;
            for (size_t j = 0; j < n; ++j) g[j] += yo[j] * (go[j] - dot);
        }
    });
}

Tensor log(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.data()[i]);
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto x = copy_data(a);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i] / (*x)[i];
    });
}

Tensor exp(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.data()[i]);
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto y = std::make_shared<std::vector<double>>(out);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i] * (*y)[i];
    });
}

Tensor abs(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(a.data()[i]);
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto x = copy_data(a);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i)
            (*ga)[i] += og[i] * ((*x)[i] > 0.0 ? 1.0 : (*x)[i] < 0.0 ? -1.0 : 0.0);
    });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, a.data()[i]));
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto x = copy_data(a);
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i)
            if ((*x)[i] > lo && (*x)[i] < hi) (*ga)[i] += og[i];
    });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    if (!track({&a})) return Tensor::scalar(s);
    auto* ga = grad_of(a);
    size_t n = a.numel();
    return tracked({1}, {s}, {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < n; ++i) (*ga)[i] += og[0];
    });
}

Tensor mean(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    size_t n = a.numel();
    double m = s / static_cast<double>(n);
    if (!track({&a})) return Tensor::scalar(m);
    auto* ga = grad_of(a);
    return tracked({1}, {m}, {&a}, [=](const std::vector<double>& og) {
        double g = og[0] / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) (*ga)[i] += g;
    });
}

Tensor sum_lastdim(const Tensor& a) {
    if (a.rank() < 1) throw shape_error("sum_lastdim on scalar");
    size_t n = a.shape().back();
    size_t nrows = a.numel() / n;
    Shape out_shape(a.shape().begin(), a.shape().end() - 1);
    if (out_shape.empty()) out_shape = {1};
    std::vector<double> out(nrows, 0.0);
    for (size_t r = 0; r < nrows; ++r)
        for (size_t j = 0; j < n; ++j) out[r] += a.data()[r * n + j];
    if (!track({&a})) return Tensor::from(std::move(out_shape), std::move(out));
    auto* ga = grad_of(a);
    return tracked(std::move(out_shape), std::move(out), {&a},
                   [=](const std::vector<double>& og) {
                       for (size_t r = 0; r < nrows; ++r)
                           for (size_t j = 0; j < n; ++j) (*ga)[r * n + j] += og[r];
                   });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw shape_error("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape));
    std::vector<double> out = a.data();
    if (!track({&a})) return Tensor::from(std::move(shape), std::move(out));
    auto* ga = grad_of(a);
    return tracked(std::move(shape), std::move(out), {&a},
                   [=](const std::vector<double>& og) {
                       for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i];
                   });
}

Tensor flatten(const Tensor& a) { return reshape(a, {a.numel()}); }

Tensor concat(const std::vector<Tensor>& parts, size_t axis) {
    if (parts.empty()) throw contract_error("concat of zero tensors");
    size_t r = parts[0].rank();
    for (const Tensor& t : parts)
        if (t.rank() != r) throw shape_error("concat rank mismatch");
    if (axis >= r) throw shape_error("concat axis out of rank");

    Shape out_shape = parts[0].shape();
    size_t total_axis = 0;
    for (const Tensor& t : parts) {
        for (size_t d = 0; d < r; ++d)
            if (d != axis && t.shape()[d] != out_shape[d])
                throw shape_error("concat " + shape_str(t.shape()) + " vs " +
                                  shape_str(out_shape));
        total_axis += t.shape()[axis];
    }
    out_shape[axis] = total_axis;

    size_t outer = 1, inner = 1;
    for (size_t d = 0; d < axis; ++d) outer *= out_shape[d];
    for (size_t d = axis + 1; d < r; ++d) inner *= out_shape[d];

    std::vector<double> out(shape_numel(out_shape));
    std::vector<size_t> offs(parts.size()), lens(parts.size());
    size_t off = 0;
    for (size_t p = 0; p < parts.size(); ++p) {
        offs[p] = off;
        lens[p] = parts[p].shape()[axis];
        off += lens[p];
    }
    for (size_t p = 0; p < parts.size(); ++p) {
        const auto& d = parts[p].data();
        for (size_t o = 0; o < outer; ++o)
            for (size_t x = 0; x < lens[p]; ++x)
                std::copy(d.begin() + (o * lens[p] + x) * inner,
                          d.begin() + (o * lens[p] + x + 1) * inner,
                          out.begin() + (o * total_axis + offs[p] + x) * inner);
    }

    bool any = false;
    if (autograd::grad_enabled())
        for (const Tensor& t : parts) any = any || t.requires_grad();
    if (!any) return Tensor::from(std::move(out_shape), std::move(out));

    std::vector<std::vector<double>*> grads(parts.size(), nullptr);
    auto node = std::make_shared<Node>();
    node->numel = out.size();
    for (size_t p = 0; p < parts.size(); ++p) {
        if (!parts[p].requires_grad()) continue;
        grads[p] = grad_of(parts[p]);
        node->parents.push_back(parts[p].node());
    }
    size_t ta = total_axis;
    node->backprop = [=](const std::vector<double>& og) {
        for (size_t p = 0; p < grads.size(); ++p) {
            if (!grads[p]) continue;
            for (size_t o = 0; o < outer; ++o)
                for (size_t x = 0; x < lens[p]; ++x) {
                    const double* src = og.data() + (o * ta + offs[p] + x) * inner;
                    double* dst = grads[p]->data() + (o * lens[p] + x) * inner;
                    for (size_t i = 0; i < inner; ++i) dst[i] += src[i];
                }
        }
    };
    return Tensor::make_tracked(std::move(out_shape), std::move(out), std::move(node));
}

Tensor slice_lastdim(const Tensor& a, size_t from, size_t to) {
    size_t n = a.shape().back();
    if (from > to || to > n)
        throw shape_error("slice_lastdim [" + std::to_string(from) + "," +
                          std::to_string(to) + ") of " + shape_str(a.shape()));
    size_t w = to - from;
    size_t nrows = a.numel() / n;
    Shape out_shape = a.shape();
    out_shape.back() = w;
    std::vector<double> out(nrows * w);
    for (size_t r = 0; r < nrows; ++r)
        std::copy(a.data().begin() + r * n + from, a.data().begin() + r * n + to,
                  out.begin() + r * w);
    if (!track({&a})) return Tensor::from(std::move(out_shape), std::move(out));
    auto* ga = grad_of(a);
    return tracked(std::move(out_shape), std::move(out), {&a},
                   [=](const std::vector<double>& og) {
                       for (size_t r = 0; r < nrows; ++r)
                           for (size_t j = 0; j < w; ++j)
                               (*ga)[r * n + from + j] += og[r * w + j];
                   });
}

Tensor dropout(const Tensor& a, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw contract_error("dropout p must be in [0,1)");
    if (!training || p == 0.0) {
        // Evaluation mode is the identity (inverted scaling happens at train time).
        return reshape(a, a.shape());
    }
    double keep = 1.0 - p;
    auto mask = std::make_shared<std::vector<double>>(a.numel());
    for (size_t i = 0; i < a.numel(); ++i)
        (*mask)[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    std::vector<double> out(a.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * (*mask)[i];
    if (!track({&a})) return Tensor::from(a.shape(), std::move(out));
    auto* ga = grad_of(a);
    return tracked(a.shape(), std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < og.size(); ++i) (*ga)[i] += og[i] * (*mask)[i];
    });
}

Tensor gather(const Tensor& a, const std::vector<size_t>& indices, Shape out_shape) {
    if (shape_numel(out_shape) != indices.size())
        throw shape_error("gather output shape " + shape_str(out_shape) +
                          " does not match index count " + std::to_string(indices.size()));
    std::vector<double> out(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.numel()) throw bounds_error("gather index out of range");
        out[i] = a.data()[indices[i]];
    }
    if (!track({&a})) return Tensor::from(std::move(out_shape), std::move(out));
    auto idx = std::make_shared<std::vector<size_t>>(indices);
    auto* ga = grad_of(a);
    return tracked(std::move(out_shape), std::move(out), {&a},
                   [=](const std::vector<double>& og) {
                       for (size_t i = 0; i < og.size(); ++i) (*ga)[(*idx)[i]] += og[i];
                   });
}

Tensor rows(const Tensor& table, const std::vector<int32_t>& row_ids) {
    if (table.rank() != 2) throw shape_error("rows() expects a rank-2 table");
    size_t cols = table.dim(1);
    std::vector<size_t> idx;
    idx.reserve(row_ids.size() * cols);
    for (int32_t r : row_ids) {
        if (r < 0 || static_cast<size_t>(r) >= table.dim(0))
            throw bounds_error("row id " + std::to_string(r) + " out of table");
        for (size_t c = 0; c < cols; ++c) idx.push_back(static_cast<size_t>(r) * cols + c);
    }
    return gather(table, idx, {row_ids.size(), cols});
}

Tensor segment_sum(const Tensor& a, const std::vector<size_t>& seg_ids, size_t n_seg) {
    if (a.rank() != 1 || seg_ids.size() != a.numel())
        throw shape_error("segment_sum expects rank-1 input with one segment id per value");
    std::vector<double> out(n_seg, 0.0);
    for (size_t i = 0; i < seg_ids.size(); ++i) {
        if (seg_ids[i] >= n_seg) throw bounds_error("segment id out of range");
        out[seg_ids[i]] += a.data()[i];
    }
    if (!track({&a})) return Tensor::from({n_seg}, std::move(out));
    auto ids = std::make_shared<std::vector<size_t>>(seg_ids);
    auto* ga = grad_of(a);
    return tracked({n_seg}, std::move(out), {&a}, [=](const std::vector<double>& og) {
        for (size_t i = 0; i < ids->size(); ++i) (*ga)[i] += og[(*ids)[i]];
    });
}

void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw contract_error("backward requires a scalar loss");
    if (!loss.requires_grad())
        throw contract_error("backward on a tensor without recorded graph");

    // Iterative post-order over the parent DAG, then reverse = topological.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.push_back({loss.node().get(), 0});
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        node->ensure_grad();
        if (node->backprop) node->backprop(node->grad);
    }
}

}  // namespace rgvae
