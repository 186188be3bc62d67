#pragma once

#include "echoless/audio.hpp"
#include "echoless/rt_estimator.hpp"
#include "echoless/stft.hpp"

#include <cstddef>
#include <optional>

namespace echoless {

/// How the a-priori SNR carries history from frame l-1.
enum class PriorSnr {
    /// prio(l) = beta * prio(l-1) + (1 - beta) * max(inst(l), 0)
    recursive,
    /// prio(l) = beta * G(l-1)^2 * post(l-1) + (1 - beta) * max(inst(l), 0);
    /// the history term is the estimated clean-to-reverb ratio of the previous frame.
    decision_directed,
};

struct DereverbConfig {
    double late_delay = 0.080;  ///< seconds between a frame and the history used to predict its reverb
    double beta = 0.9;          ///< a-priori SNR smoothing
    double lambda = 0.1;        ///< gain floor
    std::size_t psd_smoothing_frames = 3;
    PriorSnr prior = PriorSnr::decision_directed;
    /// Defaults to StftConfig::for_rate of the input when unset.
    std::optional<StftConfig> stft;

    void validate() const;
    /// round(late_delay / frame_period), at least 1.
    [[nodiscard]] std::size_t delay_frames(double frame_period) const;
};

/// Polack decay: energy envelope exp(-2 * delta * t).
struct ReverbModel {
    double rt60 = 0.0;
    double delta = 0.0;

    static ReverbModel from_rt60(double rt60);
};

/// 3 ln(10) / rt60, so that exp(-2 * delta * rt60) = 1e-6.
/// Throws InvalidArgument for rt60 <= 0.
double decay_constant(double rt60);

/// exp(-2 delta T) times the smoothed power L_T frames earlier; zero while
/// no history exists.
RealGrid reverberant_psd(const RealGrid& power, const ReverbModel& model, const DereverbConfig& cfg,
                         double frame_period);

struct GainGrid {
    RealGrid gain;
    RealGrid snr_post;
    RealGrid snr_prio;
};

/// Spectral gain with smoothed a-priori SNR and floor:
///   post = |X|^2 / reverb, inst = post - 1,
///   prio = beta * history + (1 - beta) * max(inst, 0)   (history per PriorSnr),
///   G = max(1 - 1 / sqrt(1 + prio), lambda).
/// Where no reverb estimate exists G = 1 and the recursion restarts at the
/// next frame from max(inst, 0).
GainGrid spectral_gain(const RealGrid& power, const RealGrid& reverb, const DereverbConfig& cfg);

struct DereverbResult {
    AudioBuffer output;
    GainGrid gains;
    double rt60 = 0.0;
    bool rt60_estimated = false;
    /// Blind estimation failed and kFallbackRt60 was used instead.
    bool fallback = false;
    double mean_gain = 1.0;
    std::optional<RtEstimate> estimate;
};

inline constexpr double kFallbackRt60 = 0.5;

/// Estimates RT60 when none is given, applies the gain to the STFT magnitudes
/// with the original phase, and resynthesizes.
DereverbResult dereverberate(const AudioBuffer& buf, const DereverbConfig& cfg = {},
                             std::optional<double> rt60 = std::nullopt);

/// Same pipeline on an existing STFT of the input; cfg.stft is ignored.
DereverbResult dereverberate(const Spectrogram& spec, const DereverbConfig& cfg = {},
                             std::optional<double> rt60 = std::nullopt);

} // namespace echoless
