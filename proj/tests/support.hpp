#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "diacdm/error.hpp"
#include "diacdm/rng.hpp"
#include "diacdm/tensor.hpp"

namespace diacdm::testing {

inline std::filesystem::path data_dir() { return DIACDM_TEST_DATA_DIR; }

/// Runs `f` and returns the error code it threw, if any.
template <typename F>
std::optional<Errc> thrown_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

class TempDir {
   public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("diacdm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

   private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, bool grad = true, double lo = -1.0,
                            double hi = 1.0) {
    std::vector<double> v(r * c);
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_values(r, c, std::move(v), grad);
}

/// Relative error with a floor on the denominator so that gradients that
/// are zero on both sides compare as equal.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Compares backward() of `loss()` with central differences (step h) for
/// every entry of every tensor in `params`. `loss` must rebuild its graph on
/// each call.
inline GradCheck check_gradients(const std::vector<Tensor>& params, const std::function<Tensor()>& loss,
                                 double h = 1e-5) {
    for (Tensor p : params) p.zero_grad();
    loss().backward();
    std::vector<std::vector<double>> analytic;
    for (const Tensor& p : params) {
        auto g = p.grad();
        analytic.emplace_back(p.size(), 0.0);
        std::copy(g.begin(), g.end(), analytic.back().begin());
    }
    GradCheck out;
    NoGradGuard no_grad;
    for (std::size_t t = 0; t < params.size(); ++t) {
        Tensor p = params[t];
        auto vals = p.mutable_values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + h;
            const double up = loss().item();
            vals[i] = saved - h;
            const double down = loss().item();
            vals[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic[t][i], numeric));
            ++out.checked;
        }
    }
    return out;
}

}  // namespace diacdm::testing
