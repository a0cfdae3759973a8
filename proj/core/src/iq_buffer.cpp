#include "stormbench/iq_buffer.hpp"

#include <cmath>
#include <string>

#include "stormbench/error.hpp"

namespace stormbench {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::LengthError: return "LengthError";
        case ErrorCode::RangeError: return "RangeError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::IllegalState: return "IllegalState";
        case ErrorCode::RoleConflict: return "RoleConflict";
        case ErrorCode::UnknownWaveform: return "UnknownWaveform";
        case ErrorCode::UnknownDevice: return "UnknownDevice";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::CompatibilityError: return "CompatibilityError";
        case ErrorCode::DuplicateError: return "DuplicateError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

IqBuffer::IqBuffer(std::vector<Sample> samples, double sample_rate, std::int64_t start_timestamp)
    : samples_(std::move(samples)), sample_rate_(sample_rate), start_(start_timestamp) {
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
        fail(ErrorCode::ConfigError, "sample_rate must be positive, got " + std::to_string(sample_rate));
    }
}

double IqBuffer::mean_power() const noexcept { return stormbench::mean_power(samples_); }
double IqBuffer::energy() const noexcept { return stormbench::energy(samples_); }

bool is_contiguous(const IqBuffer& previous, const IqBuffer& next) noexcept {
    return next.start_timestamp() == previous.end_timestamp();
}

double energy(std::span<const Sample> samples) noexcept {
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc;
}

double mean_power(std::span<const Sample> samples) noexcept {
    return samples.empty() ? 0.0 : energy(samples) / static_cast<double>(samples.size());
}

}  // namespace stormbench
