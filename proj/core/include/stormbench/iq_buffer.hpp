#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace stormbench {

using Sample = std::complex<double>;

// Timestamped block of complex baseband samples. Timestamps are sample
// indices since the stream epoch; a contiguous stream satisfies
// next.start_timestamp() == prev.end_timestamp().
class IqBuffer {
public:
    IqBuffer(std::vector<Sample> samples, double sample_rate, std::int64_t start_timestamp = 0);

    std::span<const Sample> samples() const noexcept { return samples_; }
    std::vector<Sample> take_samples() && noexcept { return std::move(samples_); }
    double sample_rate() const noexcept { return sample_rate_; }
    std::int64_t start_timestamp() const noexcept { return start_; }
    std::int64_t end_timestamp() const noexcept { return start_ + static_cast<std::int64_t>(samples_.size()); }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const noexcept { return samples_[i]; }

    double mean_power() const noexcept;
    double energy() const noexcept;

private:
    std::vector<Sample> samples_;
    double sample_rate_;
    std::int64_t start_;
};

bool is_contiguous(const IqBuffer& previous, const IqBuffer& next) noexcept;

double mean_power(std::span<const Sample> samples) noexcept;
double energy(std::span<const Sample> samples) noexcept;

}  // namespace stormbench
