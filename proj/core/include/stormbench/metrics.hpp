#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stormbench/constellation.hpp"
#include "stormbench/iq_buffer.hpp"

namespace stormbench {

// Known symbols at the head of every link frame.
struct AccessPreamble {
    std::vector<Sample> symbols;
    Constellation constellation{Modulation::Qpsk};

    // `length` seeded random points of `modulation`. Throws ConfigError for
    // length < 16.
    static AccessPreamble make(std::size_t length = 64, Modulation modulation = Modulation::Qpsk,
                               std::uint64_t seed = 0x5eed);
};

// Least-squares complex gain h minimising |rx - h * preamble|^2.
Sample estimate_gain(std::span<const Sample> rx, std::span<const Sample> reference);

// Fraction of preamble symbols decided wrongly after dividing rx by the
// least-squares gain. A zero gain estimate counts every symbol as an error.
// Throws LengthError when the lengths differ.
double compute_aser(std::span<const Sample> rx, const AccessPreamble& preamble);

// Symbol error count behind compute_aser.
std::size_t count_symbol_errors(std::span<const Sample> rx, const AccessPreamble& preamble);

struct KldOptions {
    std::size_t bins_per_axis = 32;
    double smoothing = 1e-6;  // probability mass added to every bin
};

// D(P_rx || Q_ref) in nats between 2-D I/Q histograms over [-R, R]^2 with
// R = 4 * rms(ref); samples outside clamp to the edge bins. Both inputs need
// at least 10 * bins^2 samples (InsufficientData otherwise). Smoothing
// keeps the result finite, below ln(1 / smoothing).
double compute_kld(std::span<const Sample> rx, std::span<const Sample> ref, const KldOptions& options = {});
double compute_kld(const IqBuffer& rx, const IqBuffer& ref, const KldOptions& options = {});

// Upper bound of compute_kld for the given options (disjoint supports).
double kld_upper_bound(const KldOptions& options = {});

// Closed-form symbol error probability of Gray QPSK over AWGN at Es/N0
// (linear): 2p - p^2, p = Q(sqrt(Es/N0)).
double qpsk_ser(double es_n0);
double q_function(double x);

struct MetricsRecord {
    double timestamp = 0.0;  // window start, seconds of stream time
    std::int64_t window = 0;
    double aser = 0.0;
    std::optional<double> kld;  // absent when the window holds too few samples
    double throughput = 0.0;    // delivered bits per second
    std::size_t frames_sent = 0;
    std::size_t frames_delivered = 0;
    bool interference_on = false;
    nlohmann::json context = nlohmann::json::object();
};

nlohmann::json to_json(const MetricsRecord& r);
MetricsRecord metrics_record_from_json(const nlohmann::json& j);

}  // namespace stormbench
