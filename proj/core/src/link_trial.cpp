#include "stormbench/link_trial.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "stormbench/error.hpp"
#include "stormbench/prng.hpp"
#include "stormbench/pulse_shape.hpp"

namespace stormbench {

std::size_t LinkConfig::payload_symbols() const {
    const std::size_t bits = Constellation(modulation).bits_per_symbol();
    return (frame_bits + bits - 1) / bits;
}

std::size_t LinkConfig::frame_symbols() const {
    return preamble_length + payload_symbols() * static_cast<std::size_t>(repetition);
}

void check(const LinkConfig& cfg) {
    if (cfg.frame_bits == 0) fail(ErrorCode::ConfigError, "frame_bits must be positive");
    if (cfg.repetition != 1 && cfg.repetition != 2 && cfg.repetition != 4) {
        fail(ErrorCode::ConfigError, "repetition must be 1, 2 or 4");
    }
    if (cfg.preamble_length < 16) fail(ErrorCode::ConfigError, "preamble needs at least 16 symbols");
    check(PulseShape{cfg.samples_per_symbol, cfg.rolloff, 8});
}

InterferenceSource generator_source(std::shared_ptr<WaveformGenerator> generator) {
    return [g = std::move(generator)](std::span<Sample> out) { g->generate_into(out); };
}

InterferenceSource session_source(Session& session) {
    struct State {
        std::deque<Sample> pending;
    };
    auto st = std::make_shared<State>();
    session.set_transmitter_sink([st](const IqBuffer& b) {
        st->pending.insert(st->pending.end(), b.samples().begin(), b.samples().end());
    });
    return [st, &session](std::span<Sample> out) {
        while (st->pending.size() < out.size()) {
            if (session.advance(session.config().buffer_size) == 0) break;
        }
        const std::size_t k = std::min(out.size(), st->pending.size());
        std::copy_n(st->pending.begin(), k, out.begin());
        st->pending.erase(st->pending.begin(), st->pending.begin() + static_cast<std::ptrdiff_t>(k));
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), Sample{});
    };
}

namespace {

struct Frame {
    std::int64_t first_symbol = 0;
    std::vector<std::uint32_t> payload;  // one copy
};

struct WindowStats {
    std::size_t sent = 0;
    std::size_t delivered = 0;
    std::size_t preamble_symbols = 0;
    std::size_t preamble_errors = 0;
    std::vector<Sample> rx_preamble;
    std::vector<Sample> ref_preamble;
    bool interference_on = false;
};

// Rolling sample store addressed by absolute stream index.
class Rolling {
public:
    void append(std::span<const Sample> s) { data_.insert(data_.end(), s.begin(), s.end()); }
    std::int64_t end() const { return base_ + static_cast<std::int64_t>(data_.size()); }
    // Drops everything before `index`.
    void discard_before(std::int64_t index) {
        if (index <= base_) return;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(index - base_), data_.size());
        data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n));
        base_ += static_cast<std::int64_t>(n);
    }
    Sample mf(std::int64_t center, std::span<const double> taps, int sps) const {
        return matched_filter_at(data_, static_cast<std::size_t>(center - base_), taps, sps);
    }

private:
    std::vector<Sample> data_;
    std::int64_t base_ = 0;
};

std::uint32_t vote(std::span<const std::uint32_t> labels, std::span<const Sample> copies, const Constellation& c) {
    std::map<std::uint32_t, int> counts;
    for (auto l : labels) ++counts[l];
    int best = 0;
    std::uint32_t label = 0;
    bool tie = false;
    for (const auto& [l, n] : counts) {
        if (n > best) {
            best = n;
            label = l;
            tie = false;
        } else if (n == best) {
            tie = true;
        }
    }
    if (!tie) return label;
    Sample mean{};
    for (const auto& s : copies) mean += s;
    return c.decide(mean / static_cast<double>(copies.size()));
}

}  // namespace

LinkTrialResult run_link_trial(const LinkConfig& link, const InterferenceSource& interference,
                               const SceneConfig& scene, const LinkTrialOptions& opt) {
    check(link);
    check(scene);
    if (!(opt.duration > 0) || !(opt.window > 0) || !(opt.sample_rate > 0)) {
        fail(ErrorCode::ConfigError, "duration, window and sample_rate must be positive");
    }
    const double fs = opt.sample_rate;
    const PulseShape shape{link.samples_per_symbol, link.rolloff, 8};
    const auto taps_ptr = pulse_taps(shape);
    const std::span<const double> taps(*taps_ptr);
    const auto sps = static_cast<std::int64_t>(link.samples_per_symbol);
    const auto delay = static_cast<std::int64_t>(shape.loopback_delay());

    const auto preamble = AccessPreamble::make(link.preamble_length, link.modulation, link.preamble_seed);
    const Constellation& cons = preamble.constellation;
    const std::size_t n_payload = link.payload_symbols();
    const auto frame_syms = static_cast<std::int64_t>(link.frame_symbols());
    const auto rep = static_cast<std::size_t>(link.repetition);

    const auto total = static_cast<std::int64_t>(std::llround(opt.duration * fs));
    const auto window_len = static_cast<std::int64_t>(std::llround(opt.window * fs));
    const std::size_t n_windows = static_cast<std::size_t>((total + window_len - 1) / window_len);
    const std::int64_t frame_len = frame_syms * sps;
    const std::int64_t n_frames = total / frame_len;  // frames fully inside the run
    // Extra samples so the last frame's matched filter sees its whole tail.
    const std::int64_t horizon = total + delay + 1;

    Prng data(derive_seed(opt.seed, 0x11));
    ReceiverChannel channel(scene, fs, derive_seed(opt.seed, 0x22));
    PulseShaper shaper(shape);

    std::vector<WindowStats> windows(n_windows);
    std::deque<Frame> frames;
    std::int64_t next_frame = 0;   // frames generated
    std::int64_t decoded = 0;      // frames demodulated
    std::vector<Sample> tx_pending;
    std::int64_t tx_pos = 0;  // stream index of tx_pending[0]
    Rolling rx;
    Rolling ref;

    const std::size_t chunk = 16384;
    std::vector<Sample> tx(chunk), intf(chunk), link_rx(chunk), intf_rx(chunk), out(chunk);
    std::vector<Sample> symbol_out;

    auto push_frame = [&] {
        Frame f;
        f.first_symbol = next_frame * frame_syms;
        f.payload.resize(n_payload);
        for (auto& l : f.payload) l = static_cast<std::uint32_t>(data.below(cons.size()));
        for (const auto& s : preamble.symbols) {
            shaper.push(s, symbol_out);
        }
        for (std::size_t c = 0; c < rep; ++c) {
            for (auto l : f.payload) shaper.push(cons.point(l), symbol_out);
        }
        frames.push_back(std::move(f));
        ++next_frame;
    };

    auto demod_frame = [&](const Frame& f) {
        const std::int64_t center0 = f.first_symbol * sps + delay;
        const auto np = static_cast<std::int64_t>(preamble.symbols.size());
        std::vector<Sample> y(static_cast<std::size_t>(frame_syms));
        for (std::int64_t k = 0; k < frame_syms; ++k) y[static_cast<std::size_t>(k)] = rx.mf(center0 + k * sps, taps, link.samples_per_symbol);

        std::span<const Sample> yp(y.data(), static_cast<std::size_t>(np));
        const Sample h = estimate_gain(yp, preamble.symbols);
        const std::int64_t last_sample = (f.first_symbol + frame_syms) * sps - 1;
        auto& w = windows[static_cast<std::size_t>(last_sample / window_len)];
        w.preamble_symbols += static_cast<std::size_t>(np);
        w.preamble_errors += count_symbol_errors(yp, preamble);
        w.rx_preamble.insert(w.rx_preamble.end(), yp.begin(), yp.end());
        for (std::int64_t k = 0; k < np; ++k) w.ref_preamble.push_back(ref.mf(center0 + k * sps, taps, link.samples_per_symbol));

        ++w.sent;
        bool ok = h != Sample{};
        if (ok) {
            const Sample inv = 1.0 / h;
            std::vector<std::uint32_t> labels(rep);
            std::vector<Sample> copies(rep);
            for (std::size_t i = 0; i < n_payload && ok; ++i) {
                for (std::size_t c = 0; c < rep; ++c) {
                    copies[c] = y[static_cast<std::size_t>(np) + c * n_payload + i] * inv;
                    labels[c] = cons.decide(copies[c]);
                }
                ok = vote(labels, copies, cons) == f.payload[i];
            }
        }
        if (ok) ++w.delivered;
    };

    LinkTrialResult result;
    result.nominal_throughput =
        static_cast<double>(link.frame_bits) / (static_cast<double>(frame_len) / fs);
    std::size_t finalized = 0;
    auto finalize_through = [&](std::size_t limit) {
        for (; finalized < limit; ++finalized) {
            auto& w = windows[finalized];
            const std::int64_t start = static_cast<std::int64_t>(finalized) * window_len;
            const double seconds = static_cast<double>(std::min(window_len, total - start)) / fs;
            MetricsRecord r;
            r.window = static_cast<std::int64_t>(finalized);
            r.timestamp = static_cast<double>(start) / fs;
            r.frames_sent = w.sent;
            r.frames_delivered = w.delivered;
            r.throughput = static_cast<double>(w.delivered * link.frame_bits) / seconds;
            r.aser = w.preamble_symbols
                         ? static_cast<double>(w.preamble_errors) / static_cast<double>(w.preamble_symbols)
                         : 0.0;
            const std::size_t need = 10 * opt.kld.bins_per_axis * opt.kld.bins_per_axis;
            if (w.rx_preamble.size() >= need) r.kld = compute_kld(w.rx_preamble, w.ref_preamble, opt.kld);
            r.interference_on = w.interference_on;
            r.context = opt.context;
            r.context["modulation"] = std::string(to_string(link.modulation));
            r.context["repetition"] = link.repetition;
            r.context["frame_bits"] = link.frame_bits;
            r.context["scene"] = scene.label;
            r.context["seed"] = opt.seed;
            if (opt.on_window_symbols) opt.on_window_symbols(r.window, w.rx_preamble, w.ref_preamble);
            w.rx_preamble = {};
            w.ref_preamble = {};
            result.throughput.push_back(r.throughput);
            result.frames_sent += w.sent;
            result.frames_delivered += w.delivered;
            if (opt.on_record) opt.on_record(r);
            result.records.push_back(std::move(r));
        }
    };

    for (std::int64_t pos = 0; pos < horizon;) {
        const auto n = static_cast<std::size_t>(std::min<std::int64_t>(chunk, horizon - pos));
        // Link samples for [pos, pos + n).
        while (tx_pos + static_cast<std::int64_t>(tx_pending.size()) < pos + static_cast<std::int64_t>(n)) {
            if (next_frame < n_frames) {
                symbol_out.clear();
                push_frame();
                tx_pending.insert(tx_pending.end(), symbol_out.begin(), symbol_out.end());
            } else {
                // Run out the filter with silence.
                symbol_out.clear();
                shaper.push(Sample{}, symbol_out);
                tx_pending.insert(tx_pending.end(), symbol_out.begin(), symbol_out.end());
            }
        }
        std::copy_n(tx_pending.begin(), n, tx.begin());
        tx_pending.erase(tx_pending.begin(), tx_pending.begin() + static_cast<std::ptrdiff_t>(n));
        tx_pos += static_cast<std::int64_t>(n);

        std::span<Sample> tx_s(tx.data(), n), intf_s(intf.data(), n), link_s(link_rx.data(), n),
            intf_rx_s(intf_rx.data(), n), out_s(out.data(), n);
        if (interference) {
            interference(intf_s);
        } else {
            std::fill(intf_s.begin(), intf_s.end(), Sample{});
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = pos + static_cast<std::int64_t>(i);
            if (idx < total && intf_s[i] != Sample{}) windows[static_cast<std::size_t>(idx / window_len)].interference_on = true;
        }
        channel.propagate_link(tx_s, link_s);
        channel.add_noise(link_s);  // the interference-free reference branch
        channel.propagate_interference(intf_s, intf_rx_s);
        for (std::size_t i = 0; i < n; ++i) out_s[i] = link_s[i] + intf_rx_s[i];
        ref.append(link_s);
        rx.append(out_s);
        pos += static_cast<std::int64_t>(n);

        // Demodulate every frame whose last matched-filter instant is covered.
        while (decoded < n_frames && !frames.empty()) {
            const Frame& f = frames.front();
            const std::int64_t last_center = (f.first_symbol + frame_syms - 1) * sps + delay;
            if (last_center >= rx.end()) break;
            demod_frame(f);
            ++decoded;
            const std::int64_t keep_from = (f.first_symbol + frame_syms) * sps;
            rx.discard_before(keep_from);
            ref.discard_before(keep_from);
            frames.pop_front();
            // Frames arrive in order, so earlier windows are complete.
            finalize_through(static_cast<std::size_t>((keep_from - 1) / window_len));
        }
    }
    finalize_through(n_windows);

    return result;
}

}  // namespace stormbench
