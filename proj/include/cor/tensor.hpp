#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cor/errors.hpp"
#include "cor/rng.hpp"

namespace cor {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major double tensor with a recorded backward closure.
// Shape {} denotes a scalar (numel 1). Gradients are accumulated additively;
// callers zero them between optimizer steps.
struct Tensor : std::enable_shared_from_this<Tensor> {
    std::vector<int> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // allocated lazily, same length as data

    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;  // null for leaves
    std::string name;

    static int numel_of(const std::vector<int>& shape);
    int numel() const { return static_cast<int>(data.size()); }

    static TensorPtr make(std::vector<int> shape, double fill = 0.0, bool requires_grad = false);
    static TensorPtr from(std::vector<int> shape, std::vector<double> values,
                          bool requires_grad = false);
    static TensorPtr scalar(double v, bool requires_grad = false);

    double item() const;  // numel must be 1
    void ensure_grad();
    void zero_grad();
    bool has_grad() const { return !grad.empty(); }
    bool is_finite() const;
};

// Runs reverse-mode differentiation from a scalar loss. Populates grad on
// every reachable requires_grad tensor; accumulation is additive.
void backward(const TensorPtr& loss);

// ---- elementwise / reduction ----
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr div(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, double s);
TensorPtr add_scalar(const TensorPtr& a, double s);
TensorPtr sum(const TensorPtr& a);
TensorPtr mean(const TensorPtr& a);
// Multiplies every element by a broadcast scalar tensor (shape {}).
TensorPtr scale_t(const TensorPtr& a, const TensorPtr& s);
// Elementwise product with a constant field (no gradient into the field).
TensorPtr mul_const(const TensorPtr& a, const std::vector<double>& field);
TensorPtr reshape(const TensorPtr& a, std::vector<int> shape);
// Concatenation along the last axis; leading dimensions must agree.
TensorPtr concat_last(const TensorPtr& a, const TensorPtr& b);

// ---- neural-net kernels ----
enum class Act { gelu, relu, sigmoid };
TensorPtr activation(const TensorPtr& x, Act kind);

// x: [rows..., m] treated as a stack of row vectors; w: [m, n]; b: [n].
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

// Cross-correlation on channels-last input [h, w, cin].
// weight: [kh, kw, cin/groups, cout]; bias: [cout]. Zero padding.
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias,
                 int groups, int padding, int stride = 1);

// Per-position normalization over the channel (last) axis.
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps = 1e-5);

// Softmax over all h*w positions of a [h, w] map.
TensorPtr softmax_over_positions(const TensorPtr& x);
// Softmax over positions independently per channel of a [h, w, k] stack.
TensorPtr softmax_hw(const TensorPtr& x);

// a . b / (|a| |b|) for rank-1 tensors; throws DegenerateVector on zero norm.
TensorPtr cosine_similarity(const TensorPtr& a, const TensorPtr& b);

// Mean of F over positions where mask is nonzero. mask: h*w values in {0,1}.
TensorPtr masked_pool(const TensorPtr& feat, const std::vector<double>& mask);

// Per-position dot product of [h, w, c] features with a [c] vector -> [h, w, 1].
TensorPtr dot_positions(const TensorPtr& feat, const TensorPtr& v);

// out[c] = (1/K) sum_k sum_p maps[p,k] * feat[p,c]; feat [h,w,c], maps [h,w,K].
TensorPtr aggregate_maps(const TensorPtr& feat, const TensorPtr& maps);

// Bilinear interpolation of a [h, w] map to [out_h, out_w].
TensorPtr bilinear_upsample(const TensorPtr& x, int out_h, int out_w);

// Sum of table rows selected by ids; table [rows, d].
TensorPtr embedding_sum(const TensorPtr& table, const std::vector<int>& ids);

// Weighted binary cross-entropy on logits with constant targets/weights:
// sum_i w_i * bce(sigmoid(z_i), g_i) / sum_i w_i, numerically stable.
TensorPtr bce_logits_weighted(const TensorPtr& logits, const std::vector<double>& gt,
                              const std::vector<double>& weights);

// Fills a leaf tensor with uniform values in +-1/sqrt(fan_in).
void init_uniform_fan_in(const TensorPtr& t, int fan_in, Rng& rng);

}  // namespace cor
