#include "echoless/dereverb.hpp"

#include "echoless/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace echoless {

void DereverbConfig::validate() const {
    if (!(late_delay > 0.0)) throw InvalidArgument("late_delay must be positive");
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must be in [0, 1)");
    if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("lambda must be in (0, 1)");
    if (psd_smoothing_frames == 0) throw InvalidArgument("psd_smoothing_frames must be >= 1");
    if (stft) stft->validate();
}

std::size_t DereverbConfig::delay_frames(double frame_period) const {
    if (!(frame_period > 0.0)) throw InvalidArgument("frame period must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(late_delay / frame_period)));
}

double decay_constant(double rt60) {
    if (!(rt60 > 0.0) || !std::isfinite(rt60)) throw InvalidArgument("rt60 must be positive");
    return 3.0 * std::numbers::ln10 / rt60;
}

ReverbModel ReverbModel::from_rt60(double rt60) { return ReverbModel{rt60, decay_constant(rt60)}; }

RealGrid reverberant_psd(const RealGrid& power, const ReverbModel& model, const DereverbConfig& cfg,
                         double frame_period) {
    cfg.validate();
    const std::size_t delay = cfg.delay_frames(frame_period);
    const double delay_seconds = static_cast<double>(delay) * frame_period;
    const double attenuation = std::exp(-2.0 * model.delta * delay_seconds);

    // Centered moving average over psd_smoothing_frames, truncated at the edges.
    const std::size_t half = cfg.psd_smoothing_frames / 2;
    const std::size_t bins = power.bins;
    RealGrid out(bins, power.frames, 0.0);
    std::vector<double> acc(bins);
    for (std::size_t l = delay; l < power.frames; ++l) {
        const std::size_t src = l - delay;
        const std::size_t lo = src >= half ? src - half : 0;
        const std::size_t hi = std::min(power.frames - 1, lo + cfg.psd_smoothing_frames - 1);
        const double scale = attenuation / static_cast<double>(hi - lo + 1);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double* row = power.data.data() + j * bins;
            for (std::size_t k = 0; k < bins; ++k) acc[k] += row[k];
        }
        double* dst = out.data.data() + l * bins;
        for (std::size_t k = 0; k < bins; ++k) dst[k] = acc[k] * scale;
    }
    return out;
}

GainGrid spectral_gain(const RealGrid& power, const RealGrid& reverb, const DereverbConfig& cfg) {
    cfg.validate();
    if (!power.same_shape(reverb)) throw InvalidArgument("power and reverb grids differ in shape");
    const double inf = std::numeric_limits<double>::infinity();
    GainGrid g{RealGrid(power.bins, power.frames, 1.0), RealGrid(power.bins, power.frames, inf),
               RealGrid(power.bins, power.frames, inf)};

    const std::size_t bins = power.bins;
    std::vector<char> have_prior(bins, 0);
    std::vector<double> history(bins, 0.0);
    for (std::size_t l = 0; l < power.frames; ++l) {
        const std::size_t row = l * bins;
        for (std::size_t k = 0; k < bins; ++k) {
            const double r = reverb.data[row + k];
            if (!(r > 0.0)) {
                have_prior[k] = 0;
                continue;
            }
            const double post = power.data[row + k] / r;
            const double rectified = std::max(post - 1.0, 0.0);
            const double prior = have_prior[k] ? cfg.beta * history[k] + (1.0 - cfg.beta) * rectified : rectified;
            have_prior[k] = 1;
            const double gain = std::max(1.0 - 1.0 / std::sqrt(1.0 + prior), cfg.lambda);
            g.snr_post.data[row + k] = post;
            g.snr_prio.data[row + k] = prior;
            g.gain.data[row + k] = gain;
            history[k] = cfg.prior == PriorSnr::recursive ? prior : gain * gain * post;
        }
    }
    return g;
}

DereverbResult dereverberate(const AudioBuffer& buf, const DereverbConfig& cfg, std::optional<double> rt60) {
    cfg.validate();
    const StftConfig stft_cfg = cfg.stft.value_or(StftConfig::for_rate(buf.sample_rate()));
    return dereverberate(stft(buf, stft_cfg), cfg, rt60);
}

DereverbResult dereverberate(const Spectrogram& input, const DereverbConfig& cfg, std::optional<double> rt60) {
    cfg.validate();
    Spectrogram spec = input;

    double rt = 0.0;
    bool estimated = false;
    bool fallback = false;
    std::optional<RtEstimate> estimate;
    if (rt60) {
        rt = *rt60;
    } else {
        estimated = true;
        try {
            estimate = estimate_rt60(spec);
            rt = estimate->rt60;
        } catch (const EstimationFailure&) {
            fallback = true;
            rt = kFallbackRt60;
        }
    }

    const auto power = spec.power();
    const auto reverb = reverberant_psd(power, ReverbModel::from_rt60(rt), cfg, spec.frame_period());
    auto gains = spectral_gain(power, reverb, cfg);

    double gain_sum = 0.0;
    for (std::size_t i = 0; i < spec.data().size(); ++i) {
        spec.data()[i] *= gains.gain.data[i];
        gain_sum += gains.gain.data[i];
    }
    const double mean_gain = gains.gain.data.empty() ? 1.0 : gain_sum / static_cast<double>(gains.gain.data.size());

    return DereverbResult{istft(spec), std::move(gains), rt, estimated, fallback, mean_gain, std::move(estimate)};
}

} // namespace echoless
