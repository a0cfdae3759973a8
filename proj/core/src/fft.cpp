#include "stormbench/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "stormbench/error.hpp"

namespace stormbench {

namespace {

// The FFTW planner is not re-entrant; fftw_execute on a private plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct Plan {
    std::size_t n = 0;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;

    Plan(std::size_t size, int sign) : n(size) {
        std::lock_guard lock(planner_mutex());
        in = fftw_alloc_complex(n);
        out = fftw_alloc_complex(n);
        plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }
};

Plan& plan_for(std::size_t n, int sign) {
    thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> plans;
    auto& slot = plans[{n, sign}];
    if (!slot) slot = std::make_unique<Plan>(n, sign);
    return *slot;
}

void run(std::span<const Sample> in, std::span<Sample> out, int sign, double scale) {
    if (in.size() != out.size()) fail(ErrorCode::ShapeError, "dft input and output sizes differ");
    if (in.empty()) return;
    auto& p = plan_for(in.size(), sign);
    static_assert(sizeof(Sample) == sizeof(fftw_complex));
    std::memcpy(p.in, in.data(), in.size() * sizeof(Sample));
    fftw_execute(p.plan);
    const auto* res = reinterpret_cast<const Sample*>(p.out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = res[i] * scale;
}

}  // namespace

void dft_unitary(std::span<const Sample> in, std::span<Sample> out) {
    run(in, out, FFTW_FORWARD, 1.0 / std::sqrt(static_cast<double>(in.size())));
}

void idft_unitary(std::span<const Sample> in, std::span<Sample> out) {
    run(in, out, FFTW_BACKWARD, 1.0 / std::sqrt(static_cast<double>(in.size())));
}

void dft_raw(std::span<const Sample> in, std::span<Sample> out) { run(in, out, FFTW_FORWARD, 1.0); }

std::vector<Sample> dft_unitary(std::span<const Sample> in) {
    std::vector<Sample> out(in.size());
    dft_unitary(in, out);
    return out;
}

std::vector<Sample> idft_unitary(std::span<const Sample> in) {
    std::vector<Sample> out(in.size());
    idft_unitary(in, out);
    return out;
}

}  // namespace stormbench
