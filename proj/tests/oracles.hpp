#pragma once

// Independent brute-force references used to pin expected values in tests.
// These deliberately share no code with the library implementations.

#include <cmath>
#include <vector>

namespace oracle {

// Naive quadruple-loop grouped cross-correlation, channels-last.
inline std::vector<double> conv2d(const std::vector<double>& in, int h, int w, int cin,
                                  const std::vector<double>& wt, int kh, int kw, int cpg, int cout,
                                  const std::vector<double>& bias, int groups, int pad,
                                  int stride = 1) {
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    const int ocg = cout / groups;
    std::vector<double> out(static_cast<std::size_t>(oh) * ow * cout, 0.0);
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int oc = 0; oc < cout; ++oc) {
                double s = bias[oc];
                const int g = oc / ocg;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        for (int ic = 0; ic < cpg; ++ic) {
                            const int iy = oy * stride + ky - pad;
                            const int ix = ox * stride + kx - pad;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            s += in[(iy * w + ix) * cin + g * cpg + ic] *
                                 wt[((ky * kw + kx) * cpg + ic) * cout + oc];
                        }
                out[(oy * ow + ox) * cout + oc] = s;
            }
    return out;
}

inline std::vector<double> linear(const std::vector<double>& x, int rows, int m,
                                  const std::vector<double>& w, int n,
                                  const std::vector<double>& b) {
    std::vector<double> out(static_cast<std::size_t>(rows) * n, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) {
            double s = b[j];
            for (int i = 0; i < m; ++i) s += x[r * m + i] * w[i * n + j];
            out[r * n + j] = s;
        }
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : x) denom += std::exp(v - mx);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i] - mx) / denom;
    return out;
}

inline double gelu_erf(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Weighted-sum aggregation of per-position features by K normalized maps.
inline std::vector<double> aggregate(const std::vector<double>& feat, int positions, int c,
                                     const std::vector<double>& maps, int k) {
    std::vector<double> out(c, 0.0);
    for (int kk = 0; kk < k; ++kk)
        for (int p = 0; p < positions; ++p)
            for (int i = 0; i < c; ++i) out[i] += maps[p * k + kk] * feat[p * c + i];
    for (int i = 0; i < c; ++i) out[i] /= k;
    return out;
}

// Mean over a window intersected with the image (border-aware).
inline std::vector<double> avgpool_same(const std::vector<double>& x, int h, int w, int window) {
    const int r = window / 2;
    std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            double s = 0.0;
            int cnt = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int yy = y + dy, xc = xx + dx;
                    if (yy < 0 || yy >= h || xc < 0 || xc >= w) continue;
                    s += x[yy * w + xc];
                    ++cnt;
                }
            out[y * w + xx] = s / cnt;
        }
    return out;
}

}  // namespace oracle
