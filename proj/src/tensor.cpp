#include "cor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace cor {

namespace {

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": shape mismatch");
    }
}

TensorPtr make_result(std::vector<int> shape, std::vector<TensorPtr> parents) {
    auto out = Tensor::make(std::move(shape));
    for (const auto& p : parents) {
        if (p->requires_grad) {
            out->requires_grad = true;
        }
    }
    out->parents = std::move(parents);
    return out;
}

}  // namespace

int Tensor::numel_of(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("nonpositive dimension");
        n *= d;
    }
    return n;
}

TensorPtr Tensor::make(std::vector<int> shape, double fill, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    int n = numel_of(shape);
    t->shape = std::move(shape);
    t->data.assign(static_cast<std::size_t>(n), fill);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    int n = numel_of(shape);
    if (static_cast<int>(values.size()) != n) {
        throw DimensionError("data length does not match shape");
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::scalar(double v, bool requires_grad) {
    return from({}, {v}, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on non-scalar tensor");
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::is_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void backward(const TensorPtr& loss) {
    if (loss->numel() != 1) {
        throw DimensionError("backward: loss must be scalar");
    }
    // Topological order by iterative DFS.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Tensor* p = node->parents[idx].get();
            ++idx;
            if (visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        // Subgraphs with no trainable ancestor are pruned.
        if (node->requires_grad && node->backward_fn && node->has_grad()) {
            node->backward_fn();
        }
    }
}

// ---- elementwise / reduction ----

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "add");
    auto out = make_result(a->shape, {a, b});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + b->data[i];
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, b, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        b->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) {
            a->grad[i] += out_p->grad[i];
            b->grad[i] += out_p->grad[i];
        }
    };
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "sub");
    auto out = make_result(a->shape, {a, b});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] - b->data[i];
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, b, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        b->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) {
            a->grad[i] += out_p->grad[i];
            b->grad[i] -= out_p->grad[i];
        }
    };
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mul");
    auto out = make_result(a->shape, {a, b});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, b, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        b->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) {
            a->grad[i] += out_p->grad[i] * b->data[i];
            b->grad[i] += out_p->grad[i] * a->data[i];
        }
    };
    return out;
}

TensorPtr div(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "div");
    auto out = make_result(a->shape, {a, b});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] / b->data[i];
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, b, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        b->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) {
            const double inv = 1.0 / b->data[i];
            a->grad[i] += out_p->grad[i] * inv;
            b->grad[i] -= out_p->grad[i] * a->data[i] * inv * inv;
        }
    };
    return out;
}

TensorPtr scale(const TensorPtr& a, double s) {
    auto out = make_result(a->shape, {a});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * s;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, s, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) a->grad[i] += out_p->grad[i] * s;
    };
    return out;
}

TensorPtr add_scalar(const TensorPtr& a, double s) {
    auto out = make_result(a->shape, {a});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + s;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) a->grad[i] += out_p->grad[i];
    };
    return out;
}

TensorPtr sum(const TensorPtr& a) {
    auto out = make_result({}, {a});
    double s = 0.0;
    for (double v : a->data) s += v;
    out->data[0] = s;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        const double g = out_p->grad[0];
        for (int i = 0; i < a->numel(); ++i) a->grad[i] += g;
    };
    return out;
}

TensorPtr mean(const TensorPtr& a) {
    return scale(sum(a), 1.0 / a->numel());
}

TensorPtr scale_t(const TensorPtr& a, const TensorPtr& s) {
    if (s->numel() != 1) throw DimensionError("scale_t: scale must be scalar");
    auto out = make_result(a->shape, {a, s});
    const double sv = s->data[0];
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * sv;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, s, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        s->ensure_grad();
        const double sv = s->data[0];
        double sg = 0.0;
        for (int i = 0; i < out_p->numel(); ++i) {
            a->grad[i] += out_p->grad[i] * sv;
            sg += out_p->grad[i] * a->data[i];
        }
        s->grad[0] += sg;
    };
    return out;
}

TensorPtr mul_const(const TensorPtr& a, const std::vector<double>& field) {
    if (field.size() != a->data.size()) throw DimensionError("mul_const: field size mismatch");
    auto out = make_result(a->shape, {a});
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * field[i];
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, field, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) a->grad[i] += out_p->grad[i] * field[i];
    };
    return out;
}

TensorPtr reshape(const TensorPtr& a, std::vector<int> shape) {
    if (Tensor::numel_of(shape) != a->numel()) throw DimensionError("reshape: numel mismatch");
    auto out = make_result(std::move(shape), {a});
    out->data = a->data;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) a->grad[i] += out_p->grad[i];
    };
    return out;
}

TensorPtr concat_last(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.empty() || b->shape.empty() || a->shape.size() != b->shape.size()) {
        throw DimensionError("concat_last: rank mismatch");
    }
    for (std::size_t i = 0; i + 1 < a->shape.size(); ++i) {
        if (a->shape[i] != b->shape[i]) throw DimensionError("concat_last: leading dims differ");
    }
    const int ca = a->shape.back();
    const int cb = b->shape.back();
    std::vector<int> shape = a->shape;
    shape.back() = ca + cb;
    const int rows = a->numel() / ca;
    auto out = make_result(std::move(shape), {a, b});
    for (int r = 0; r < rows; ++r) {
        for (int i = 0; i < ca; ++i) out->data[r * (ca + cb) + i] = a->data[r * ca + i];
        for (int i = 0; i < cb; ++i) out->data[r * (ca + cb) + ca + i] = b->data[r * cb + i];
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, b, ca, cb, rows, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        b->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            for (int i = 0; i < ca; ++i) a->grad[r * ca + i] += out_p->grad[r * (ca + cb) + i];
            for (int i = 0; i < cb; ++i) {
                b->grad[r * cb + i] += out_p->grad[r * (ca + cb) + ca + i];
            }
        }
    };
    return out;
}

// ---- activations ----

namespace {
double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }
double gelu_bwd(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}
double sigmoid_fwd(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

TensorPtr activation(const TensorPtr& x, Act kind) {
    auto out = make_result(x->shape, {x});
    for (int i = 0; i < out->numel(); ++i) {
        const double v = x->data[i];
        switch (kind) {
            case Act::gelu: out->data[i] = gelu_fwd(v); break;
            case Act::relu: out->data[i] = v > 0 ? v : 0.0; break;
            case Act::sigmoid: out->data[i] = sigmoid_fwd(v); break;
        }
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [x, kind, ow]() {
        auto out_p = ow.lock();
        x->ensure_grad();
        for (int i = 0; i < out_p->numel(); ++i) {
            double d = 0.0;
            switch (kind) {
                case Act::gelu: d = gelu_bwd(x->data[i]); break;
                case Act::relu: d = x->data[i] > 0 ? 1.0 : 0.0; break;
                case Act::sigmoid: {
                    const double s = out_p->data[i];
                    d = s * (1.0 - s);
                    break;
                }
            }
            x->grad[i] += out_p->grad[i] * d;
        }
    };
    return out;
}

// ---- linear ----

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    if (x->shape.empty() || w->shape.size() != 2 || b->shape.size() != 1) {
        throw DimensionError("linear: bad ranks");
    }
    const int m = w->shape[0];
    const int n = w->shape[1];
    if (x->shape.back() != m) throw DimensionError("linear: inner dimensions disagree");
    if (b->shape[0] != n) throw DimensionError("linear: bias length mismatch");
    const int rows = x->numel() / m;
    std::vector<int> shape = x->shape;
    shape.back() = n;
    auto out = make_result(std::move(shape), {x, w, b});
    for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < n; ++j) {
            double s = b->data[j];
            for (int i = 0; i < m; ++i) s += x->data[r * m + i] * w->data[i * n + j];
            out->data[r * n + j] = s;
        }
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [x, w, b, m, n, rows, ow]() {
        auto out_p = ow.lock();
        x->ensure_grad();
        w->ensure_grad();
        b->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            for (int j = 0; j < n; ++j) {
                const double g = out_p->grad[r * n + j];
                if (g == 0.0) continue;
                b->grad[j] += g;
                for (int i = 0; i < m; ++i) {
                    x->grad[r * m + i] += g * w->data[i * n + j];
                    w->grad[i * n + j] += g * x->data[r * m + i];
                }
            }
        }
    };
    return out;
}

// ---- conv2d ----

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias,
                 int groups, int padding, int stride) {
    if (input->shape.size() != 3 || weight->shape.size() != 4 || bias->shape.size() != 1) {
        throw DimensionError("conv2d: bad ranks");
    }
    const int h = input->shape[0], w = input->shape[1], cin = input->shape[2];
    const int kh = weight->shape[0], kw = weight->shape[1];
    const int cpg = weight->shape[2], cout = weight->shape[3];
    if (groups < 1 || cin % groups != 0 || cout % groups != 0) {
        throw DimensionError("conv2d: channels not divisible by groups");
    }
    if (cin / groups != cpg) throw DimensionError("conv2d: weight channel mismatch");
    if (bias->shape[0] != cout) throw DimensionError("conv2d: bias length mismatch");
    if (stride < 1 || padding < 0) throw DimensionError("conv2d: bad stride/padding");
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow_ = (w + 2 * padding - kw) / stride + 1;
    if (oh <= 0 || ow_ <= 0) throw DimensionError("conv2d: empty output");
    const int ocg = cout / groups;

    auto out = make_result({oh, ow_, cout}, {input, weight, bias});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow_; ++ox) {
            for (int oc = 0; oc < cout; ++oc) {
                const int g = oc / ocg;
                double s = bias->data[oc];
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * stride + ky - padding;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox * stride + kx - padding;
                        if (ix < 0 || ix >= w) continue;
                        const double* in_px = &input->data[(iy * w + ix) * cin + g * cpg];
                        const double* w_px = &weight->data[((ky * kw + kx) * cpg) * cout + oc];
                        for (int ic = 0; ic < cpg; ++ic) {
                            s += in_px[ic] * w_px[ic * cout];
                        }
                    }
                }
                out->data[(oy * ow_ + ox) * cout + oc] = s;
            }
        }
    }
    auto owk = std::weak_ptr<Tensor>(out);
    out->backward_fn = [input, weight, bias, groups, padding, stride, h, w, cin, kh, kw, cpg,
                        cout, oh, ow_, ocg, owk]() {
        auto out_p = owk.lock();
        input->ensure_grad();
        weight->ensure_grad();
        bias->ensure_grad();
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow_; ++ox) {
                for (int oc = 0; oc < cout; ++oc) {
                    const double g = out_p->grad[(oy * ow_ + ox) * cout + oc];
                    if (g == 0.0) continue;
                    const int grp = oc / ocg;
                    bias->grad[oc] += g;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy * stride + ky - padding;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride + kx - padding;
                            if (ix < 0 || ix >= w) continue;
                            const int in_base = (iy * w + ix) * cin + grp * cpg;
                            const int w_base = ((ky * kw + kx) * cpg) * cout + oc;
                            for (int ic = 0; ic < cpg; ++ic) {
                                input->grad[in_base + ic] += g * weight->data[w_base + ic * cout];
                                weight->grad[w_base + ic * cout] += g * input->data[in_base + ic];
                            }
                        }
                    }
                }
            }
        }
    };
    return out;
}

// ---- layer norm ----

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps) {
    if (x->shape.empty()) throw DimensionError("layer_norm: scalar input");
    const int c = x->shape.back();
    if (c < 1) throw DimensionError("layer_norm: channel count < 1");
    if (gamma->numel() != c || beta->numel() != c) {
        throw DimensionError("layer_norm: gamma/beta length mismatch");
    }
    const int rows = x->numel() / c;
    auto out = make_result(x->shape, {x, gamma, beta});
    std::vector<double> inv_std(rows), mu(rows);
    for (int r = 0; r < rows; ++r) {
        double m = 0.0;
        for (int i = 0; i < c; ++i) m += x->data[r * c + i];
        m /= c;
        double var = 0.0;
        for (int i = 0; i < c; ++i) {
            const double d = x->data[r * c + i] - m;
            var += d * d;
        }
        var /= c;
        mu[r] = m;
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (int i = 0; i < c; ++i) {
            const double xh = (x->data[r * c + i] - m) * inv_std[r];
            out->data[r * c + i] = gamma->data[i] * xh + beta->data[i];
        }
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [x, gamma, beta, c, rows, mu, inv_std, ow]() {
        auto out_p = ow.lock();
        x->ensure_grad();
        gamma->ensure_grad();
        beta->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            double sum_dxh = 0.0, sum_dxh_xh = 0.0;
            for (int i = 0; i < c; ++i) {
                const double xh = (x->data[r * c + i] - mu[r]) * inv_std[r];
                const double g = out_p->grad[r * c + i];
                gamma->grad[i] += g * xh;
                beta->grad[i] += g;
                const double dxh = g * gamma->data[i];
                sum_dxh += dxh;
                sum_dxh_xh += dxh * xh;
            }
            for (int i = 0; i < c; ++i) {
                const double xh = (x->data[r * c + i] - mu[r]) * inv_std[r];
                const double dxh = out_p->grad[r * c + i] * gamma->data[i];
                x->grad[r * c + i] +=
                    inv_std[r] * (dxh - sum_dxh / c - xh * sum_dxh_xh / c);
            }
        }
    };
    return out;
}

// ---- softmax over positions ----

namespace {
TensorPtr softmax_slices(const TensorPtr& x, int slices, int slice_stride, int positions) {
    // slice s covers elements {p * slice_stride + s : p in [0, positions)}
    auto out = make_result(x->shape, {x});
    for (int s = 0; s < slices; ++s) {
        double mx = -1e300;
        for (int p = 0; p < positions; ++p) mx = std::max(mx, x->data[p * slice_stride + s]);
        double denom = 0.0;
        for (int p = 0; p < positions; ++p) {
            denom += std::exp(x->data[p * slice_stride + s] - mx);
        }
        for (int p = 0; p < positions; ++p) {
            out->data[p * slice_stride + s] = std::exp(x->data[p * slice_stride + s] - mx) / denom;
        }
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [x, slices, slice_stride, positions, ow]() {
        auto out_p = ow.lock();
        x->ensure_grad();
        for (int s = 0; s < slices; ++s) {
            double dot = 0.0;
            for (int p = 0; p < positions; ++p) {
                const int i = p * slice_stride + s;
                dot += out_p->grad[i] * out_p->data[i];
            }
            for (int p = 0; p < positions; ++p) {
                const int i = p * slice_stride + s;
                x->grad[i] += out_p->data[i] * (out_p->grad[i] - dot);
            }
        }
    };
    return out;
}
}  // namespace

TensorPtr softmax_over_positions(const TensorPtr& x) {
    if (x->shape.size() != 2) throw DimensionError("softmax_over_positions: expects [h, w]");
    return softmax_slices(x, 1, 1, x->numel());
}

TensorPtr softmax_hw(const TensorPtr& x) {
    if (x->shape.size() != 3) throw DimensionError("softmax_hw: expects [h, w, k]");
    const int k = x->shape[2];
    return softmax_slices(x, k, k, x->shape[0] * x->shape[1]);
}

// ---- cosine similarity ----

TensorPtr cosine_similarity(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != 1 || b->shape.size() != 1 || a->shape[0] != b->shape[0]) {
        throw DimensionError("cosine_similarity: expects equal-length vectors");
    }
    const int d = a->shape[0];
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < d; ++i) {
        dot += a->data[i] * b->data[i];
        na += a->data[i] * a->data[i];
        nb += b->data[i] * b->data[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na == 0.0 || nb == 0.0) throw DegenerateVector("cosine_similarity: zero-norm input");
    auto out = make_result({}, {a, b});
    const double cosv = dot / (na * nb);
    out->data[0] = cosv;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [a, b, d, na, nb, cosv, ow]() {
        auto out_p = ow.lock();
        a->ensure_grad();
        b->ensure_grad();
        const double g = out_p->grad[0];
        for (int i = 0; i < d; ++i) {
            a->grad[i] += g * (b->data[i] / (na * nb) - cosv * a->data[i] / (na * na));
            b->grad[i] += g * (a->data[i] / (na * nb) - cosv * b->data[i] / (nb * nb));
        }
    };
    return out;
}

// ---- masked pooling ----

TensorPtr masked_pool(const TensorPtr& feat, const std::vector<double>& mask) {
    if (feat->shape.size() != 3) throw DimensionError("masked_pool: expects [h, w, c]");
    const int positions = feat->shape[0] * feat->shape[1];
    const int c = feat->shape[2];
    if (static_cast<int>(mask.size()) != positions) {
        throw DimensionError("masked_pool: mask size mismatch");
    }
    double cnt = 0.0;
    for (double m : mask) cnt += (m != 0.0) ? 1.0 : 0.0;
    if (cnt == 0.0) throw EmptyMask("masked_pool: mask selects no positions");
    auto out = make_result({c}, {feat});
    for (int p = 0; p < positions; ++p) {
        if (mask[p] == 0.0) continue;
        for (int i = 0; i < c; ++i) out->data[i] += feat->data[p * c + i];
    }
    for (int i = 0; i < c; ++i) out->data[i] /= cnt;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [feat, mask, positions, c, cnt, ow]() {
        auto out_p = ow.lock();
        feat->ensure_grad();
        for (int p = 0; p < positions; ++p) {
            if (mask[p] == 0.0) continue;
            for (int i = 0; i < c; ++i) feat->grad[p * c + i] += out_p->grad[i] / cnt;
        }
    };
    return out;
}

// ---- per-position dot with vector ----

TensorPtr dot_positions(const TensorPtr& feat, const TensorPtr& v) {
    if (feat->shape.size() != 3 || v->shape.size() != 1 || feat->shape[2] != v->shape[0]) {
        throw DimensionError("dot_positions: channel widths disagree");
    }
    const int positions = feat->shape[0] * feat->shape[1];
    const int c = feat->shape[2];
    auto out = make_result({feat->shape[0], feat->shape[1], 1}, {feat, v});
    for (int p = 0; p < positions; ++p) {
        double s = 0.0;
        for (int i = 0; i < c; ++i) s += feat->data[p * c + i] * v->data[i];
        out->data[p] = s;
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [feat, v, positions, c, ow]() {
        auto out_p = ow.lock();
        feat->ensure_grad();
        v->ensure_grad();
        for (int p = 0; p < positions; ++p) {
            const double g = out_p->grad[p];
            if (g == 0.0) continue;
            for (int i = 0; i < c; ++i) {
                feat->grad[p * c + i] += g * v->data[i];
                v->grad[i] += g * feat->data[p * c + i];
            }
        }
    };
    return out;
}

// ---- activation-map aggregation ----

TensorPtr aggregate_maps(const TensorPtr& feat, const TensorPtr& maps) {
    if (feat->shape.size() != 3 || maps->shape.size() != 3 || feat->shape[0] != maps->shape[0] ||
        feat->shape[1] != maps->shape[1]) {
        throw DimensionError("aggregate_maps: spatial shapes disagree");
    }
    const int positions = feat->shape[0] * feat->shape[1];
    const int c = feat->shape[2];
    const int k = maps->shape[2];
    auto out = make_result({c}, {feat, maps});
    for (int p = 0; p < positions; ++p) {
        double wsum = 0.0;
        for (int j = 0; j < k; ++j) wsum += maps->data[p * k + j];
        for (int i = 0; i < c; ++i) out->data[i] += wsum * feat->data[p * c + i];
    }
    for (int i = 0; i < c; ++i) out->data[i] /= k;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [feat, maps, positions, c, k, ow]() {
        auto out_p = ow.lock();
        feat->ensure_grad();
        maps->ensure_grad();
        for (int p = 0; p < positions; ++p) {
            double wsum = 0.0;
            for (int j = 0; j < k; ++j) wsum += maps->data[p * k + j];
            double gdotf = 0.0;
            for (int i = 0; i < c; ++i) {
                feat->grad[p * c + i] += wsum / k * out_p->grad[i];
                gdotf += out_p->grad[i] * feat->data[p * c + i];
            }
            for (int j = 0; j < k; ++j) maps->grad[p * k + j] += gdotf / k;
        }
    };
    return out;
}

// ---- bilinear upsample ----

TensorPtr bilinear_upsample(const TensorPtr& x, int out_h, int out_w) {
    if (x->shape.size() != 2) throw DimensionError("bilinear_upsample: expects [h, w]");
    const int h = x->shape[0], w = x->shape[1];
    auto out = make_result({out_h, out_w}, {x});
    struct Tap {
        int i0, i1, j0, j1;
        double wy, wx;
    };
    auto taps = std::make_shared<std::vector<Tap>>(static_cast<std::size_t>(out_h) * out_w);
    for (int oy = 0; oy < out_h; ++oy) {
        double sy = (oy + 0.5) * static_cast<double>(h) / out_h - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
        const int i0 = static_cast<int>(std::floor(sy));
        const int i1 = std::min(i0 + 1, h - 1);
        const double wy = sy - i0;
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = (ox + 0.5) * static_cast<double>(w) / out_w - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
            const int j0 = static_cast<int>(std::floor(sx));
            const int j1 = std::min(j0 + 1, w - 1);
            const double wx = sx - j0;
            (*taps)[oy * out_w + ox] = {i0, i1, j0, j1, wy, wx};
            out->data[oy * out_w + ox] =
                (1 - wy) * ((1 - wx) * x->data[i0 * w + j0] + wx * x->data[i0 * w + j1]) +
                wy * ((1 - wx) * x->data[i1 * w + j0] + wx * x->data[i1 * w + j1]);
        }
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [x, taps, w, out_h, out_w, ow]() {
        auto out_p = ow.lock();
        x->ensure_grad();
        for (int p = 0; p < out_h * out_w; ++p) {
            const double g = out_p->grad[p];
            if (g == 0.0) continue;
            const Tap& t = (*taps)[p];
            x->grad[t.i0 * w + t.j0] += g * (1 - t.wy) * (1 - t.wx);
            x->grad[t.i0 * w + t.j1] += g * (1 - t.wy) * t.wx;
            x->grad[t.i1 * w + t.j0] += g * t.wy * (1 - t.wx);
            x->grad[t.i1 * w + t.j1] += g * t.wy * t.wx;
        }
    };
    return out;
}

// ---- embedding sum ----

TensorPtr embedding_sum(const TensorPtr& table, const std::vector<int>& ids) {
    if (table->shape.size() != 2) throw DimensionError("embedding_sum: table must be [rows, d]");
    const int rows = table->shape[0], d = table->shape[1];
    for (int id : ids) {
        if (id < 0 || id >= rows) throw DimensionError("embedding_sum: id out of range");
    }
    auto out = make_result({d}, {table});
    for (int id : ids) {
        for (int i = 0; i < d; ++i) out->data[i] += table->data[id * d + i];
    }
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [table, ids, d, ow]() {
        auto out_p = ow.lock();
        table->ensure_grad();
        for (int id : ids) {
            for (int i = 0; i < d; ++i) table->grad[id * d + i] += out_p->grad[i];
        }
    };
    return out;
}

// ---- weighted BCE with logits ----

TensorPtr bce_logits_weighted(const TensorPtr& logits, const std::vector<double>& gt,
                              const std::vector<double>& weights) {
    const int n = logits->numel();
    if (static_cast<int>(gt.size()) != n || static_cast<int>(weights.size()) != n) {
        throw DimensionError("bce_logits_weighted: size mismatch");
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw DimensionError("bce_logits_weighted: nonpositive weight mass");
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = logits->data[i];
        // max(z,0) - z*g + log(1+exp(-|z|))
        acc += weights[i] * (std::max(z, 0.0) - z * gt[i] + std::log1p(std::exp(-std::fabs(z))));
    }
    auto out = make_result({}, {logits});
    out->data[0] = acc / wsum;
    auto ow = std::weak_ptr<Tensor>(out);
    out->backward_fn = [logits, gt, weights, wsum, n, ow]() {
        auto out_p = ow.lock();
        logits->ensure_grad();
        const double g = out_p->grad[0];
        for (int i = 0; i < n; ++i) {
            logits->grad[i] += g * weights[i] * (sigmoid_fwd(logits->data[i]) - gt[i]) / wsum;
        }
    };
    return out;
}

void init_uniform_fan_in(const TensorPtr& t, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
    for (double& v : t->data) v = rng.next_range(-bound, bound);
}

}  // namespace cor
