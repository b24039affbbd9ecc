#pragma once

#include <filesystem>
#include <string>

#include "estrnn/rng.hpp"
#include "estrnn/tensor.hpp"

namespace testsup {

inline estrnn::Tensor random_tensor(std::vector<int> shape, estrnn::Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
    estrnn::Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const estrnn::Tensor& a, const estrnn::Tensor& b) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline bool bit_equal(const estrnn::Tensor& a, const estrnn::Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

// Unique scratch directory under the build tree; wiped on construction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("estrnn_test_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testsup
