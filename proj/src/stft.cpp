#include "echoless/stft.hpp"

#include "echoless/errors.hpp"
#include "echoless/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace echoless {

std::vector<double> make_window(std::size_t length) {
    if (length < 2) throw InvalidArgument("window length must be >= 2");
    std::vector<double> w(length);
    const double n = static_cast<double>(length);
    for (std::size_t i = 0; i < length; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    }
    // Exact values at the quarter points keep the taper symmetric to the last bit.
    if (length % 2 == 0) w[length / 2] = 1.0;
    if (length % 4 == 0) w[length / 4] = w[3 * length / 4] = 0.5;
    return w;
}

StftConfig StftConfig::for_rate(int sample_rate) {
    if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
    const double target = 0.046 * sample_rate;
    std::size_t lower = 1;
    while (lower * 2 <= target) lower *= 2;
    const std::size_t upper = lower * 2;
    const std::size_t window = (target - static_cast<double>(lower) <= static_cast<double>(upper) - target)
                                   ? lower
                                   : upper;
    return StftConfig{std::max<std::size_t>(window, 16), std::max<std::size_t>(window, 16) / 16};
}

void StftConfig::validate() const {
    if (window_length < 2) throw InvalidArgument("window_length must be >= 2");
    if (hop == 0 || window_length % hop != 0) {
        throw InvalidArgument("hop " + std::to_string(hop) + " does not divide window length " +
                              std::to_string(window_length));
    }
    if (window_length / hop < 3) {
        throw InvalidArgument("overlap too small for Hann overlap-add reconstruction");
    }
}

Spectrogram::Spectrogram(StftConfig cfg, int sample_rate, std::size_t frames, std::size_t signal_length)
    : cfg_(cfg), sample_rate_(sample_rate), frames_(frames), signal_length_(signal_length),
      data_(cfg.bins() * frames) {
    if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
}

RealGrid Spectrogram::power() const {
    RealGrid g(bins(), frames_);
    for (std::size_t i = 0; i < data_.size(); ++i) g.data[i] = std::norm(data_[i]);
    return g;
}

Spectrogram stft(const AudioBuffer& buf, const StftConfig& cfg) {
    cfg.validate();
    const std::size_t n = buf.size();
    const std::size_t w_len = cfg.window_length;
    if (n < w_len) {
        throw InvalidArgument("buffer of " + std::to_string(n) + " samples is shorter than one window (" +
                              std::to_string(w_len) + ")");
    }
    const std::size_t frames = 1 + (n - w_len + cfg.hop - 1) / cfg.hop;
    Spectrogram spec(cfg, buf.sample_rate(), frames, n);

    const auto window = make_window(w_len);
    RealFft fft(w_len);
    std::vector<double> frame(w_len);
    const auto x = buf.samples();
    for (std::size_t l = 0; l < frames; ++l) {
        const std::size_t start = l * cfg.hop;
        for (std::size_t i = 0; i < w_len; ++i) {
            const std::size_t idx = start + i;
            frame[i] = idx < n ? x[idx] * window[i] : 0.0;
        }
        fft.forward(frame, std::span(spec.data()).subspan(l * spec.bins(), spec.bins()));
    }
    return spec;
}

AudioBuffer istft(const Spectrogram& spec) {
    const auto& cfg = spec.config();
    cfg.validate();
    const std::size_t w_len = cfg.window_length;
    const std::size_t out_len = spec.signal_length();
    const std::size_t span_len = std::max(out_len, (spec.frames() - 1) * cfg.hop + w_len);

    const auto window = make_window(w_len);
    std::vector<double> acc(span_len, 0.0);
    std::vector<double> norm(span_len, 0.0);
    std::vector<double> frame(w_len);
    RealFft fft(w_len);
    const double scale = 1.0 / static_cast<double>(w_len);
    for (std::size_t l = 0; l < spec.frames(); ++l) {
        fft.inverse(std::span(spec.data()).subspan(l * spec.bins(), spec.bins()), frame);
        const std::size_t start = l * cfg.hop;
        for (std::size_t i = 0; i < w_len; ++i) {
            acc[start + i] += frame[i] * scale * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }

    // Interior value of sum_l w^2(n - l*hop) for a periodic Hann.
    const double interior = 3.0 * static_cast<double>(w_len) / (8.0 * static_cast<double>(cfg.hop));
    const double floor = 1e-3 * interior;
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        out[i] = acc[i] / std::max(norm[i], floor);
    }
    return AudioBuffer(std::move(out), spec.sample_rate());
}

double spectral_energy(const Spectrogram& spec) {
    const std::size_t k_max = spec.bins() - 1;
    double total = 0.0;
    for (std::size_t l = 0; l < spec.frames(); ++l) {
        for (std::size_t k = 0; k <= k_max; ++k) {
            const double p = std::norm(spec.at(k, l));
            total += (k == 0 || k == k_max) ? p : 2.0 * p;
        }
    }
    return total / static_cast<double>(spec.config().window_length);
}

} // namespace echoless
