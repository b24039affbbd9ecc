#include "estrnn/nn_kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "estrnn/errors.hpp"

namespace estrnn::nn {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

// Cap on the scratch im2col buffer so that full-resolution inference does not
// allocate gigabytes; larger outputs are processed in column chunks.
constexpr std::int64_t kColBudgetDoubles = 8 << 20;  // 64 MB

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor* b, bool transposed) {
    if (x.ndim() != 3) throw ShapeError("conv input must be [C,H,W], got " + shape_str(x.shape()));
    if (w.ndim() != 4) throw ShapeError("conv weight must be 4d, got " + shape_str(w.shape()));
    const int in_dim = transposed ? w.dim(0) : w.dim(1);
    if (x.dim(0) != in_dim) {
        throw ShapeError("conv channel mismatch: input " + shape_str(x.shape()) + " vs weight " +
                         shape_str(w.shape()));
    }
    if (b) {
        const int out_dim = transposed ? w.dim(1) : w.dim(0);
        if (b->ndim() != 1 || b->dim(0) != out_dim) {
            throw ShapeError("conv bias shape " + shape_str(b->shape()) + " does not match weight " +
                             shape_str(w.shape()));
        }
    }
}

// Fills cols columns [col_begin, col_end) of the im2col matrix for x.
// Row layout: ci*k*k + ky*k + kx; column index = ho*Wo + wo.
void im2col_chunk(const Tensor& x, const ConvGeom& g, int out_w, std::int64_t col_begin,
                  std::int64_t col_end, double* col) {
    const int ci_n = x.dim(0);
    const int h = x.dim(1);
    const int w = x.dim(2);
    const std::int64_t n_cols = col_end - col_begin;
    for (int ci = 0; ci < ci_n; ++ci) {
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                double* row = col + (static_cast<std::int64_t>(ci) * g.k * g.k + ky * g.k + kx) * n_cols;
                for (std::int64_t c = col_begin; c < col_end; ++c) {
                    const int ho = static_cast<int>(c / out_w);
                    const int wo = static_cast<int>(c % out_w);
                    const int iy = ho * g.stride - g.pad + ky;
                    const int ix = wo * g.stride - g.pad + kx;
                    row[c - col_begin] =
                        (iy >= 0 && iy < h && ix >= 0 && ix < w) ? x.at3(ci, iy, ix) : 0.0;
                }
            }
        }
    }
}

// Scatter-add transpose of im2col_chunk.
void col2im_chunk(const double* col, const ConvGeom& g, int out_w, std::int64_t col_begin,
                  std::int64_t col_end, Tensor& x_accum) {
    const int ci_n = x_accum.dim(0);
    const int h = x_accum.dim(1);
    const int w = x_accum.dim(2);
    const std::int64_t n_cols = col_end - col_begin;
    for (int ci = 0; ci < ci_n; ++ci) {
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                const double* row =
                    col + (static_cast<std::int64_t>(ci) * g.k * g.k + ky * g.k + kx) * n_cols;
                for (std::int64_t c = col_begin; c < col_end; ++c) {
                    const int ho = static_cast<int>(c / out_w);
                    const int wo = static_cast<int>(c % out_w);
                    const int iy = ho * g.stride - g.pad + ky;
                    const int ix = wo * g.stride - g.pad + kx;
                    if (iy >= 0 && iy < h && ix >= 0 && ix < w) x_accum.at3(ci, iy, ix) += row[c - col_begin];
                }
            }
        }
    }
}

std::int64_t chunk_cols(std::int64_t rows, std::int64_t total_cols) {
    const std::int64_t per_chunk = std::max<std::int64_t>(1, kColBudgetDoubles / std::max<std::int64_t>(1, rows));
    return std::min(per_chunk, total_cols);
}

}  // namespace

int conv_out_dim(int in, const ConvGeom& g) {
    const int span = in + 2 * g.pad - g.k;
    if (span < 0) {
        throw ShapeError("conv kernel " + std::to_string(g.k) + " larger than padded input dim " +
                         std::to_string(in));
    }
    return span / g.stride + 1;
}

int deconv_out_dim(int in, const ConvGeom& g) {
    return (in - 1) * g.stride - 2 * g.pad + g.k;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, const ConvGeom& g) {
    check_conv_args(x, w, b, false);
    const int co_n = w.dim(0);
    const int ci_n = w.dim(1);
    const int ho = conv_out_dim(x.dim(1), g);
    const int wo = conv_out_dim(x.dim(2), g);
    Tensor y({co_n, ho, wo});

    const std::int64_t rows = static_cast<std::int64_t>(ci_n) * g.k * g.k;
    const std::int64_t total = static_cast<std::int64_t>(ho) * wo;

    if (g.k == 1 && g.stride == 1 && g.pad == 0) {
        // 1x1 convolution is a plain matrix product, no gather needed.
        CMapRM wm(w.data(), co_n, ci_n);
        CMapRM xm(x.data(), ci_n, total);
        MapRM ym(y.data(), co_n, total);
        ym.noalias() = wm * xm;
    } else {
        const std::int64_t chunk = chunk_cols(rows, total);
        std::vector<double> col(static_cast<std::size_t>(rows * chunk));
        CMapRM wm(w.data(), co_n, rows);
        for (std::int64_t begin = 0; begin < total; begin += chunk) {
            const std::int64_t end = std::min(total, begin + chunk);
            im2col_chunk(x, g, wo, begin, end, col.data());
            CMapRM cm(col.data(), rows, end - begin);
            MapRM ym(y.data(), co_n, total);
            ym.middleCols(begin, end - begin).noalias() = wm * cm;
        }
    }

    if (b) {
        for (int co = 0; co < co_n; ++co) {
            double* row = y.data() + static_cast<std::int64_t>(co) * total;
            const double bias = (*b)[co];
            for (std::int64_t i = 0; i < total; ++i) row[i] += bias;
        }
    }
    return y;
}

Tensor conv2d_grad_input(const Tensor& dy, const Tensor& w, const ConvGeom& g, int in_h, int in_w) {
    const int co_n = w.dim(0);
    const int ci_n = w.dim(1);
    if (dy.dim(0) != co_n) {
        throw ShapeError("conv grad: dy channels " + shape_str(dy.shape()) + " vs weight " +
                         shape_str(w.shape()));
    }
    Tensor dx({ci_n, in_h, in_w});
    const std::int64_t rows = static_cast<std::int64_t>(ci_n) * g.k * g.k;
    const std::int64_t total = static_cast<std::int64_t>(dy.dim(1)) * dy.dim(2);
    const std::int64_t chunk = chunk_cols(rows, total);
    std::vector<double> col(static_cast<std::size_t>(rows * chunk));
    CMapRM wm(w.data(), co_n, rows);
    CMapRM dym(dy.data(), co_n, total);
    for (std::int64_t begin = 0; begin < total; begin += chunk) {
        const std::int64_t end = std::min(total, begin + chunk);
        MapRM cm(col.data(), rows, end - begin);
        cm.noalias() = wm.transpose() * dym.middleCols(begin, end - begin);
        col2im_chunk(col.data(), g, dy.dim(2), begin, end, dx);
    }
    return dx;
}

void conv2d_grad_weight(const Tensor& dy, const Tensor& x, const ConvGeom& g, Tensor& dw) {
    const int co_n = dy.dim(0);
    const int ci_n = x.dim(0);
    const std::int64_t rows = static_cast<std::int64_t>(ci_n) * g.k * g.k;
    const std::int64_t total = static_cast<std::int64_t>(dy.dim(1)) * dy.dim(2);
    const std::int64_t chunk = chunk_cols(rows, total);
    std::vector<double> col(static_cast<std::size_t>(rows * chunk));
    CMapRM dym(dy.data(), co_n, total);
    MapRM dwm(dw.data(), co_n, rows);
    for (std::int64_t begin = 0; begin < total; begin += chunk) {
        const std::int64_t end = std::min(total, begin + chunk);
        im2col_chunk(x, g, dy.dim(2), begin, end, col.data());
        CMapRM cm(col.data(), rows, end - begin);
        dwm.noalias() += dym.middleCols(begin, end - begin) * cm.transpose();
    }
}

void conv2d_grad_bias(const Tensor& dy, Tensor& db) {
    const int co_n = dy.dim(0);
    const std::int64_t total = static_cast<std::int64_t>(dy.dim(1)) * dy.dim(2);
    for (int co = 0; co < co_n; ++co) {
        const double* row = dy.data() + static_cast<std::int64_t>(co) * total;
        double s = 0.0;
        for (std::int64_t i = 0; i < total; ++i) s += row[i];
        db[co] += s;
    }
}

Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor* b, const ConvGeom& g) {
    check_conv_args(x, w, b, true);
    const int co_n = w.dim(1);
    const int ho = deconv_out_dim(x.dim(1), g);
    const int wo = deconv_out_dim(x.dim(2), g);
    if (ho <= 0 || wo <= 0) throw ShapeError("transposed conv output would be empty");
    // Transposed conv == gradient-of-input of the mirror conv whose weight
    // tensor shares this layout ([Ci,Co,k,k] read as [Co_m,Ci_m,k,k]).
    Tensor y = conv2d_grad_input(x, w, g, ho, wo);
    if (b) {
        const std::int64_t total = static_cast<std::int64_t>(ho) * wo;
        for (int co = 0; co < co_n; ++co) {
            double* row = y.data() + static_cast<std::int64_t>(co) * total;
            for (std::int64_t i = 0; i < total; ++i) row[i] += (*b)[co];
        }
    }
    return y;
}

Tensor deconv2d_grad_input(const Tensor& dy, const Tensor& w, const ConvGeom& g) {
    return conv2d(dy, w, nullptr, g);
}

void deconv2d_grad_weight(const Tensor& dy, const Tensor& x, const ConvGeom& g, Tensor& dw) {
    // Mirror-conv view: weight grad with the roles of image and activation
    // gradient swapped.
    conv2d_grad_weight(x, dy, g, dw);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
    if (x.ndim() != 1 || w.ndim() != 2 || x.dim(0) != w.dim(1)) {
        throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
    }
    const int out = w.dim(0);
    const int in = w.dim(1);
    Tensor y({out});
    CMapRM wm(w.data(), out, in);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), in);
    Eigen::Map<Eigen::VectorXd> yv(y.data(), out);
    yv.noalias() = wm * xv;
    if (b) {
        for (int i = 0; i < out; ++i) y[i] += (*b)[i];
    }
    return y;
}

Tensor linear_grad_input(const Tensor& dy, const Tensor& w) {
    const int out = w.dim(0);
    const int in = w.dim(1);
    Tensor dx({in});
    CMapRM wm(w.data(), out, in);
    Eigen::Map<const Eigen::VectorXd> dyv(dy.data(), out);
    Eigen::Map<Eigen::VectorXd> dxv(dx.data(), in);
    dxv.noalias() = wm.transpose() * dyv;
    return dx;
}

void linear_grad_weight(const Tensor& dy, const Tensor& x, Tensor& dw) {
    const int out = dw.dim(0);
    const int in = dw.dim(1);
    for (int o = 0; o < out; ++o) {
        const double g = dy[o];
        double* row = dw.data() + static_cast<std::int64_t>(o) * in;
        for (int i = 0; i < in; ++i) row[i] += g * x[i];
    }
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

void relu_grad(const Tensor& dy, const Tensor& x, Tensor& dx_accum) {
    for (std::int64_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) dx_accum[i] += dy[i];
    }
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return y;
}

void sigmoid_grad(const Tensor& dy, const Tensor& y, Tensor& dx_accum) {
    for (std::int64_t i = 0; i < y.size(); ++i) dx_accum[i] += dy[i] * y[i] * (1.0 - y[i]);
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.ndim() != 3) throw ShapeError("global_avg_pool expects [C,H,W], got " + shape_str(x.shape()));
    const int c_n = x.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor y({c_n});
    for (int c = 0; c < c_n; ++c) {
        const double* row = x.data() + c * hw;
        double s = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) s += row[i];
        y[c] = s / static_cast<double>(hw);
    }
    return y;
}

void global_avg_pool_grad(const Tensor& dy, const std::vector<int>& in_shape, Tensor& dx_accum) {
    const int c_n = in_shape[0];
    const std::int64_t hw = static_cast<std::int64_t>(in_shape[1]) * in_shape[2];
    const double inv = 1.0 / static_cast<double>(hw);
    for (int c = 0; c < c_n; ++c) {
        const double g = dy[c] * inv;
        double* row = dx_accum.data() + c * hw;
        for (std::int64_t i = 0; i < hw; ++i) row[i] += g;
    }
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
    if (xs.empty()) throw ShapeError("concat_channels: empty input list");
    const int h = xs[0]->dim(1);
    const int w = xs[0]->dim(2);
    int c_total = 0;
    for (const Tensor* t : xs) {
        if (t->ndim() != 3 || t->dim(1) != h || t->dim(2) != w) {
            throw ShapeError("concat_channels: spatial mismatch " + shape_str(t->shape()) + " vs " +
                             shape_str(xs[0]->shape()));
        }
        c_total += t->dim(0);
    }
    Tensor y({c_total, h, w});
    double* out = y.data();
    for (const Tensor* t : xs) {
        std::copy(t->data(), t->data() + t->size(), out);
        out += t->size();
    }
    return y;
}

Tensor scale_channels(const Tensor& x, const Tensor& gate) {
    if (gate.ndim() != 1 || gate.dim(0) != x.dim(0)) {
        throw ShapeError("scale_channels: gate " + shape_str(gate.shape()) + " vs map " +
                         shape_str(x.shape()));
    }
    Tensor y(x.shape());
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    for (int c = 0; c < x.dim(0); ++c) {
        const double g = gate[c];
        const double* in = x.data() + c * hw;
        double* out = y.data() + c * hw;
        for (std::int64_t i = 0; i < hw; ++i) out[i] = in[i] * g;
    }
    return y;
}

}  // namespace estrnn::nn
