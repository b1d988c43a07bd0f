#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace semaigc {

struct zero_rate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wireless link between edge transmitter and local receiver.
struct LinkSpec {
    double bandwidth_hz = 0.0;
    double snr_db = 0.0;
    double bandwidth_cap_hz = 20e6;

    void validate() const {
        if (!(bandwidth_hz >= 0.0)) {
            throw std::invalid_argument("LinkSpec: bandwidth must be >= 0");
        }
        if (bandwidth_hz > bandwidth_cap_hz) {
            throw std::invalid_argument("LinkSpec: bandwidth exceeds the configured cap");
        }
    }
};

// Compute profile of one side of the transceiver.
struct ComputeSpec {
    double core_freq_hz = 1e9;      // cycles/s per core
    int cores = 1;                  // m
    double parallel_fraction = 0.0; // tau in [0,1]
    double density_per_step = 1e3;  // w0, cycles/bit per denoising step
    double overhead_s = 0.0;        // l, delay of the non-diffusion modules

    void validate() const {
        if (!(core_freq_hz > 0.0) || cores < 1 || !(density_per_step > 0.0) ||
            !(overhead_s >= 0.0) || !(parallel_fraction >= 0.0) ||
            !(parallel_fraction <= 1.0)) {
            throw std::invalid_argument("ComputeSpec: invalid field");
        }
    }

    // Amdahl serial/parallel multiplier (1 - tau + tau/m).
    double amdahl() const {
        return 1.0 - parallel_fraction + parallel_fraction / static_cast<double>(cores);
    }
};

struct LatencyBreakdown {
    double transmission_s = 0.0;  // L1
    double edge_compute_s = 0.0;  // L2
    double local_compute_s = 0.0; // L3
    double total_s = 0.0;
};

// Shannon bit rate of the link: B log2(1 + SNR).
inline double bit_rate(const LinkSpec& link) {
    link.validate();
    return link.bandwidth_hz * std::log2(1.0 + std::pow(10.0, link.snr_db / 10.0));
}

inline double transmission_delay(double size_bits, const LinkSpec& link) {
    if (!(size_bits >= 0.0)) {
        throw std::invalid_argument("transmission_delay: negative size");
    }
    if (size_bits == 0.0) {
        return 0.0;
    }
    const double v = bit_rate(link);
    if (v <= 0.0) {
        throw zero_rate_error("transmission_delay: link rate is zero");
    }
    return size_bits / v;
}

// Compute delay for `steps` denoising steps over `input_bits` of data:
// (w0 * steps * bits / nu) * (1 - tau + tau/m) + l. The processing density
// grows linearly with the step count; each reverse step is one network pass.
inline double compute_delay(int steps, double input_bits, const ComputeSpec& spec) {
    spec.validate();
    if (steps < 0 || !(input_bits >= 0.0)) {
        throw std::invalid_argument("compute_delay: negative steps or size");
    }
    const double density = spec.density_per_step * static_cast<double>(steps);
    return density * input_bits / spec.core_freq_hz * spec.amdahl() + spec.overhead_s;
}

struct ContentSizes {
    double source_bits = 0.0;       // O_s, input data size of the edge-side model
    double transmitted_bits = 0.0;  // O_ij, frame payload size over the air
};

// End-to-end latency of a split with a transmitter-side steps out of t_hat.
inline LatencyBreakdown total_latency(int a, int t_hat, const ContentSizes& sizes,
                                      const LinkSpec& link, const ComputeSpec& edge,
                                      const ComputeSpec& local) {
    if (a < 0 || a > t_hat) {
        throw std::invalid_argument("total_latency: split outside [0, t_hat]");
    }
    LatencyBreakdown b;
    b.transmission_s = transmission_delay(sizes.transmitted_bits, link);
    b.edge_compute_s = compute_delay(a, sizes.source_bits, edge);
    b.local_compute_s = compute_delay(t_hat - a, sizes.transmitted_bits, local);
    b.total_s = b.transmission_s + b.edge_compute_s + b.local_compute_s;
    return b;
}

struct SplitAdvantage {
    bool beats_edge = false;        // direct comparison L_split < L_edge
    double margin_s = 0.0;          // L_edge - L_split
    bool bound_satisfied = false;   // compression-ratio bound evaluation
    double compression_ratio = 0.0; // O_ij / O_s
    double ratio_bound = 0.0;       // admissible ratio (infinite when unconstrained)
};

// Compares split delivery against edge-only delivery (all denoising at the
// edge, full-size content over the air, receiver-side density billed at edge
// speed), and evaluates the equivalent compression-ratio bound
//     O_ij / O_s < 1 / (1 + v K),  K = W_j(T_bar) (Cj/nu_j - Ci/nu_i)
// with Ci/Cj the Amdahl factors. When 1 + v K <= 0 the receiver-side path is
// so much cheaper that any positive ratio qualifies. The two booleans are
// algebraically identical; both are returned so tests can assert agreement.
inline SplitAdvantage semaigc_beats_edge(const ContentSizes& sizes, const LinkSpec& link,
                                         const ComputeSpec& edge, const ComputeSpec& local,
                                         int steps_total, int steps_local) {
    edge.validate();
    local.validate();
    if (!(sizes.source_bits > 0.0) || !(sizes.transmitted_bits > 0.0)) {
        throw std::invalid_argument("semaigc_beats_edge: sizes must be positive");
    }
    const double v = bit_rate(link);
    if (v <= 0.0) {
        throw zero_rate_error("semaigc_beats_edge: link rate is zero");
    }
    const double w_edge = edge.density_per_step * static_cast<double>(steps_total - steps_local);
    const double w_local = local.density_per_step * static_cast<double>(steps_local);
    const double ci = edge.amdahl();
    const double cj = local.amdahl();

    const double l_split = sizes.transmitted_bits / v +
                           w_edge * sizes.source_bits / edge.core_freq_hz * ci +
                           w_local * sizes.transmitted_bits / local.core_freq_hz * cj;
    const double l_edge = sizes.source_bits / v +
                          (w_edge * sizes.source_bits + w_local * sizes.transmitted_bits) /
                              edge.core_freq_hz * ci;

    SplitAdvantage out;
    out.margin_s = l_edge - l_split;
    out.beats_edge = l_split < l_edge;
    out.compression_ratio = sizes.transmitted_bits / sizes.source_bits;

    const double k = w_local * (cj / local.core_freq_hz - ci / edge.core_freq_hz);
    const double denom = 1.0 + v * k;
    if (denom > 0.0) {
        out.ratio_bound = 1.0 / denom;
        out.bound_satisfied = out.compression_ratio < out.ratio_bound;
    } else {
        out.ratio_bound = std::numeric_limits<double>::infinity();
        out.bound_satisfied = true;
    }
    return out;
}

}  // namespace semaigc
