#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <utility>
#include <vector>

#include "latent.hpp"
#include "rng.hpp"

namespace semaigc {

struct corrupt_header : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// AWGN link after gain equalization. signal_power is the per-dimension mean
// square of the transmitted values, measured per episode rather than assumed.
struct ChannelModel {
    double snr_db = 0.0;
    double gain_h = 1.0;
    double signal_power = 1.0;

    void validate() const {
        if (!(signal_power > 0.0)) {
            throw std::invalid_argument("ChannelModel: signal_power must be > 0");
        }
        if (!(gain_h > 0.0)) {
            throw std::invalid_argument("ChannelModel: gain_h must be > 0");
        }
    }

    // Noise variance at the receiver front end (before equalization).
    double noise_var() const {
        return signal_power * gain_h * gain_h / std::pow(10.0, snr_db / 10.0);
    }
};

// Post-equalization semantic-noise std: the sigma fed to the channel-aware
// schedule. Independent of the channel gain.
inline double semantic_noise_std(const ChannelModel& ch) {
    ch.validate();
    return std::sqrt(ch.signal_power / std::pow(10.0, ch.snr_db / 10.0));
}

inline double measured_signal_power(const std::vector<double>& values) {
    if (values.empty()) {
        return 1.0;
    }
    double acc = 0.0;
    for (double v : values) {
        acc += v * v;
    }
    return acc / static_cast<double>(values.size());
}

// Side information carried error-free alongside the payload.
struct FrameHeader {
    std::uint16_t split_step = 0;  // transmitter-side denoising steps a
    std::uint16_t label = 0;
    std::uint32_t seed_tag = 0;
};

inline bool operator==(const FrameHeader& a, const FrameHeader& b) {
    return a.split_step == b.split_step && a.label == b.label && a.seed_tag == b.seed_tag;
}

// Encoded latent in flight. Payload values are analog (channel noise acts in
// value space); bits_per_value feeds the byte layout and the latency model.
struct Frame {
    FrameHeader header;
    std::vector<double> payload;
    int bits_per_value = 32;

    std::size_t size_bits() const {
        return payload.size() * static_cast<std::size_t>(bits_per_value);
    }
};

inline Frame channel_encode(const Latent& z, FrameHeader header, int bits_per_value = 32) {
    if (bits_per_value != 32 && bits_per_value != 64) {
        throw std::invalid_argument("channel_encode: bits_per_value must be 32 or 64");
    }
    z.require_finite();
    Frame f;
    f.header = header;
    f.bits_per_value = bits_per_value;
    f.payload.reserve(z.values.size());
    for (double v : z.values) {
        f.payload.push_back(bits_per_value == 32 ? static_cast<double>(static_cast<float>(v))
                                                 : v);
    }
    return f;
}

// y' = h*y + n with n ~ N(0, sigma_n^2) per dimension. Header is error-free.
inline Frame transmit(const Frame& f, const ChannelModel& ch, Rng& rng) {
    ch.validate();
    const double sigma_n = std::sqrt(ch.noise_var());
    Frame out = f;
    for (auto& v : out.payload) {
        v = ch.gain_h * v + sigma_n * rng.normal();
    }
    return out;
}

// Gain equalization; the caller assigns the diffusion step from the header.
inline std::pair<Latent, FrameHeader> channel_decode(const Frame& f, const ChannelModel& ch) {
    ch.validate();
    if (f.bits_per_value != 32 && f.bits_per_value != 64) {
        throw corrupt_header("channel_decode: invalid bits_per_value field");
    }
    Latent z;
    z.step = 0;
    z.values.reserve(f.payload.size());
    for (double v : f.payload) {
        z.values.push_back(v / ch.gain_h);
    }
    return {std::move(z), f.header};
}

// Byte layout (little-endian):
//   offset 0  u16  magic 0xACSE -> 0x5EAC
//   offset 2  u16  split_step
//   offset 4  u16  label
//   offset 6  u16  bits_per_value
//   offset 8  u32  seed_tag
//   offset 12 u32  payload value count
//   offset 16 payload as IEEE-754 (f32 or f64 per bits_per_value)
inline constexpr std::uint16_t kFrameMagic = 0x5EAC;

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }
}

template <class T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) {
        throw corrupt_header("frame_from_bytes: truncated buffer");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
    }
    pos += sizeof(T);
    return static_cast<T>(v);
}

}  // namespace detail

inline std::vector<std::uint8_t> frame_to_bytes(const Frame& f) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + f.payload.size() * static_cast<std::size_t>(f.bits_per_value / 8));
    detail::put_le<std::uint16_t>(out, kFrameMagic);
    detail::put_le<std::uint16_t>(out, f.header.split_step);
    detail::put_le<std::uint16_t>(out, f.header.label);
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(f.bits_per_value));
    detail::put_le<std::uint32_t>(out, f.header.seed_tag);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.payload.size()));
    for (double v : f.payload) {
        if (f.bits_per_value == 32) {
            const float fv = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &fv, sizeof(bits));
            detail::put_le<std::uint32_t>(out, bits);
        } else {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            detail::put_le<std::uint64_t>(out, bits);
        }
    }
    return out;
}

inline Frame frame_from_bytes(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (detail::get_le<std::uint16_t>(bytes, pos) != kFrameMagic) {
        throw corrupt_header("frame_from_bytes: bad magic");
    }
    Frame f;
    f.header.split_step = detail::get_le<std::uint16_t>(bytes, pos);
    f.header.label = detail::get_le<std::uint16_t>(bytes, pos);
    f.bits_per_value = detail::get_le<std::uint16_t>(bytes, pos);
    if (f.bits_per_value != 32 && f.bits_per_value != 64) {
        throw corrupt_header("frame_from_bytes: invalid bits_per_value");
    }
    f.header.seed_tag = detail::get_le<std::uint32_t>(bytes, pos);
    const std::uint32_t count = detail::get_le<std::uint32_t>(bytes, pos);
    f.payload.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (f.bits_per_value == 32) {
            const std::uint32_t bits = detail::get_le<std::uint32_t>(bytes, pos);
            float fv;
            std::memcpy(&fv, &bits, sizeof(fv));
            f.payload.push_back(static_cast<double>(fv));
        } else {
            const std::uint64_t bits = detail::get_le<std::uint64_t>(bytes, pos);
            double dv;
            std::memcpy(&dv, &bits, sizeof(dv));
            f.payload.push_back(dv);
        }
    }
    return f;
}

}  // namespace semaigc
