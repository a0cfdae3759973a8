#pragma once

// Independent reference computations and small generators for the tests.
// Nothing here calls into the library's DSP; oracles are written from the
// textbook definitions.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace oracle {

using cd = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

// O(N^2) DFT with the unitary 1/sqrt(N) scale.
inline std::vector<cd> naive_dft(const std::vector<cd>& x, bool inverse = false) {
    const std::size_t n = x.size();
    std::vector<cd> out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        cd acc{};
        for (std::size_t t = 0; t < n; ++t) {
            const double a = sign * 2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * cd(std::cos(a), std::sin(a));
        }
        out[k] = acc / std::sqrt(static_cast<double>(n));
    }
    return out;
}

// Gray QPSK symbol error probability over AWGN, from erfc.
inline double qpsk_ser(double es_n0_db) {
    const double es_n0 = std::pow(10.0, es_n0_db / 10.0);
    const double p = 0.5 * std::erfc(std::sqrt(es_n0 / 2.0));
    return 1.0 - (1.0 - p) * (1.0 - p);
}

inline double energy(const std::vector<cd>& x) {
    double e = 0.0;
    for (const auto& v : x) e += std::norm(v);
    return e;
}

inline double mean_power(const std::vector<cd>& x) { return x.empty() ? 0.0 : energy(x) / static_cast<double>(x.size()); }

// Hand-rolled generators for property tests: fixed-seed engine, explicit
// ranges, no hidden shrinking.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::size_t size(std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double real(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }
    cd gaussian(double sigma = 1.0) {
        std::normal_distribution<double> n(0.0, sigma);
        return {n(rng_), n(rng_)};
    }
    std::vector<cd> gaussian_vector(std::size_t n, double sigma = 1.0) {
        std::vector<cd> v(n);
        for (auto& s : v) s = gaussian(sigma);
        return v;
    }
    // Block sizes summing to `total`, each in [1, max_block].
    std::vector<std::size_t> partition(std::size_t total, std::size_t max_block) {
        std::vector<std::size_t> parts;
        while (total > 0) {
            const std::size_t b = std::min(total, size(1, max_block));
            parts.push_back(b);
            total -= b;
        }
        return parts;
    }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("stormbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace oracle
