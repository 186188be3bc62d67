#pragma once

#include "echoless/audio.hpp"
#include "echoless/stft.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace echoless {

/// Per-frame power |X(k,l)|^2 of one STFT bin.
struct SubbandEnvelope {
    std::size_t band = 0;
    std::vector<double> energy;
    std::size_t peak_frame = 0;
    std::size_t decay_start_frame = 0;
};

struct BandFit {
    std::size_t band = 0;
    double frequency_hz = 0.0;
    double rt60 = 0.0;     ///< 0 when the band was rejected
    double r2 = 0.0;
    double slope_db_per_s = 0.0;
    std::size_t points = 0;
};

struct RtEstimate {
    double rt60 = 0.0;
    std::vector<BandFit> per_band;  ///< every band that reached the fit, accepted or not
    std::size_t bands_used = 0;
};

struct RtOptions {
    double threshold_db = 40.0;
    /// Decay fit starts this long after each band's energy peak (one modem symbol).
    double offset_seconds = 0.080;
    double fit_upper_db = -5.0;
    double fit_lower_db = -35.0;
    std::size_t min_points = 5;
    double min_r2 = 0.8;
};

/// Bins whose peak power is within `threshold_db` of the spectrogram's global
/// peak, with peak_frame filled in. Empty for an all-zero spectrogram.
std::vector<SubbandEnvelope> subband_envelopes(const Spectrogram& spec, double threshold_db = 40.0);

/// argmax frame + offset_frames, clamped to the last frame.
/// Throws NoPeak when the envelope is flat.
std::size_t decay_start(const SubbandEnvelope& env, std::size_t offset_frames);

/// Backward-integrated energy from start_frame on, in dB relative to its value
/// at start_frame. Element i corresponds to frame start_frame + i.
/// Throws InvalidArgument if start_frame is not before the last frame and
/// EmptyBand if nothing remains to integrate.
std::vector<double> edc(const SubbandEnvelope& env, std::size_t start_frame);

/// Least-squares line over the EDC samples within [lower_db, upper_db];
/// rt60 is where the line has fallen 60 dB. rt60 = 0 marks a rejected band:
/// too few points, r^2 below min_r2, a non-negative slope, or a curve that
/// never reaches lower_db.
BandFit fit_rt60_band(std::span<const double> edc_db, double frame_period, const RtOptions& opts = {});

/// Mean of the accepted per-band RT60 values. Throws EstimationFailure when no band survives.
RtEstimate estimate_rt60(const Spectrogram& spec, const RtOptions& opts = {});
RtEstimate estimate_rt60(const AudioBuffer& buf, const StftConfig& cfg, const RtOptions& opts = {});

} // namespace echoless
