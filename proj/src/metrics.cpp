#include "estrnn/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "estrnn/errors.hpp"
#include "estrnn/losses.hpp"

namespace estrnn {

double psnr(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "psnr");
    const double mse = mse_loss(a, b);
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWin> gaussian_window() {
    std::array<double, kWin> w{};
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double x = i - (kWin - 1) / 2.0;
        w[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable valid-mode Gaussian filter of one channel plane.
void filter_plane(const double* src, int h, int w, std::vector<double>& tmp, std::vector<double>& dst) {
    static const std::array<double, kWin> win = gaussian_window();
    const int wo = w - kWin + 1;
    const int ho = h - kWin + 1;
    tmp.assign(static_cast<std::size_t>(h) * wo, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wo; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWin; ++k) s += win[static_cast<std::size_t>(k)] * src[y * w + x + k];
            tmp[static_cast<std::size_t>(y) * wo + x] = s;
        }
    }
    dst.assign(static_cast<std::size_t>(ho) * wo, 0.0);
    for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWin; ++k) s += win[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>(y + k) * wo + x];
            dst[static_cast<std::size_t>(y) * wo + x] = s;
        }
    }
}

double ssim_frame(const double* a, const double* b, int channels, int h, int w) {
    if (h < kWin || w < kWin) {
        throw ShapeError("ssim: frame " + std::to_string(h) + "x" + std::to_string(w) +
                         " smaller than the " + std::to_string(kWin) + "x" + std::to_string(kWin) +
                         " window");
    }
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<double> prod(static_cast<std::size_t>(plane));
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
    double acc = 0.0;
    std::int64_t count = 0;
    for (int c = 0; c < channels; ++c) {
        const double* pa = a + c * plane;
        const double* pb = b + c * plane;
        filter_plane(pa, h, w, tmp, mu_a);
        filter_plane(pb, h, w, tmp, mu_b);
        for (std::int64_t i = 0; i < plane; ++i) prod[static_cast<std::size_t>(i)] = pa[i] * pa[i];
        filter_plane(prod.data(), h, w, tmp, m_aa);
        for (std::int64_t i = 0; i < plane; ++i) prod[static_cast<std::size_t>(i)] = pb[i] * pb[i];
        filter_plane(prod.data(), h, w, tmp, m_bb);
        for (std::int64_t i = 0; i < plane; ++i) prod[static_cast<std::size_t>(i)] = pa[i] * pb[i];
        filter_plane(prod.data(), h, w, tmp, m_ab);
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i];
            const double mb = mu_b[i];
            const double va = m_aa[i] - ma * ma;
            const double vb = m_bb[i] - mb * mb;
            const double cov = m_ab[i] - ma * mb;
            acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                   ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.ndim() == 3) {
        return ssim_frame(a.data(), b.data(), a.dim(0), a.dim(1), a.dim(2));
    }
    if (a.ndim() == 4) {
        const std::int64_t per = static_cast<std::int64_t>(a.dim(1)) * a.dim(2) * a.dim(3);
        double acc = 0.0;
        for (int t = 0; t < a.dim(0); ++t) {
            acc += ssim_frame(a.data() + t * per, b.data() + t * per, a.dim(1), a.dim(2), a.dim(3));
        }
        return acc / a.dim(0);
    }
    throw ShapeError("ssim expects [C,H,W] or [T,C,H,W], got " + shape_str(a.shape()));
}

}  // namespace estrnn
