#include "echoless/rt_estimator.hpp"

#include "echoless/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace echoless {

std::vector<SubbandEnvelope> subband_envelopes(const Spectrogram& spec, double threshold_db) {
    const auto power = spec.power();
    double global_max = 0.0;
    for (double p : power.data) global_max = std::max(global_max, p);
    if (global_max <= 0.0) return {};

    const double floor = std::isinf(threshold_db) && threshold_db > 0
                             ? 0.0
                             : global_max * std::pow(10.0, -threshold_db / 10.0);
    std::vector<SubbandEnvelope> out;
    for (std::size_t k = 0; k < power.bins; ++k) {
        SubbandEnvelope env;
        env.band = k;
        env.energy.resize(power.frames);
        std::size_t peak = 0;
        for (std::size_t l = 0; l < power.frames; ++l) {
            env.energy[l] = power.at(k, l);
            if (env.energy[l] > env.energy[peak]) peak = l;
        }
        if (env.energy[peak] < floor) continue;
        env.peak_frame = peak;
        env.decay_start_frame = peak;
        out.push_back(std::move(env));
    }
    return out;
}

std::size_t decay_start(const SubbandEnvelope& env, std::size_t offset_frames) {
    if (env.energy.empty()) throw NoPeak("empty envelope");
    const auto [lo, hi] = std::minmax_element(env.energy.begin(), env.energy.end());
    if (*lo == *hi) throw NoPeak("flat envelope in band " + std::to_string(env.band));
    const auto peak = static_cast<std::size_t>(hi - env.energy.begin());
    return std::min(peak + offset_frames, env.energy.size() - 1);
}

std::vector<double> edc(const SubbandEnvelope& env, std::size_t start_frame) {
    const std::size_t n = env.energy.size();
    if (n == 0 || start_frame + 1 >= n) {
        throw InvalidArgument("decay start must precede the last frame");
    }
    std::vector<double> cum(n - start_frame);
    double acc = 0.0;
    for (std::size_t i = n; i-- > start_frame;) {
        acc += env.energy[i];
        cum[i - start_frame] = acc;
    }
    if (acc <= 0.0) throw EmptyBand("no energy after decay start in band " + std::to_string(env.band));
    for (double& v : cum) v = v > 0.0 ? 10.0 * std::log10(v / acc) : -std::numeric_limits<double>::infinity();
    return cum;
}

BandFit fit_rt60_band(std::span<const double> edc_db, double frame_period, const RtOptions& opts) {
    BandFit fit;
    double sx = 0.0;
    double sy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < edc_db.size(); ++i) {
        const double v = edc_db[i];
        if (v <= opts.fit_upper_db && v >= opts.fit_lower_db) {
            sx += static_cast<double>(i) * frame_period;
            sy += v;
            ++count;
        }
    }
    fit.points = count;
    if (count < std::max<std::size_t>(opts.min_points, 2)) return fit;
    // The decay has to span the whole fit range; a curve that flattens out
    // above the lower bound is floor-limited.
    if (*std::min_element(edc_db.begin(), edc_db.end()) > opts.fit_lower_db) return fit;

    const double mx = sx / static_cast<double>(count);
    const double my = sy / static_cast<double>(count);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < edc_db.size(); ++i) {
        const double v = edc_db[i];
        if (v <= opts.fit_upper_db && v >= opts.fit_lower_db) {
            const double dx = static_cast<double>(i) * frame_period - mx;
            const double dy = v - my;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
    }
    if (sxx <= 0.0) return fit;
    const double slope = sxy / sxx;
    fit.slope_db_per_s = slope;
    // A perfectly straight decay has syy == residual == 0 only when slope is 0.
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
    if (slope >= 0.0 || fit.r2 < opts.min_r2) return fit;
    fit.rt60 = -60.0 / slope;
    return fit;
}

RtEstimate estimate_rt60(const Spectrogram& spec, const RtOptions& opts) {
    const double period = spec.frame_period();
    const auto offset = static_cast<std::size_t>(std::ceil(opts.offset_seconds / period - 1e-9));
    RtEstimate est;
    double sum = 0.0;
    for (auto& env : subband_envelopes(spec, opts.threshold_db)) {
        std::size_t start = 0;
        try {
            start = decay_start(env, offset);
        } catch (const NoPeak&) {
            continue;
        }
        env.decay_start_frame = start;
        if (start + 1 >= env.energy.size()) continue;
        std::vector<double> curve;
        try {
            curve = edc(env, start);
        } catch (const EmptyBand&) {
            continue;
        }
        auto fit = fit_rt60_band(curve, period, opts);
        fit.band = env.band;
        fit.frequency_hz = spec.bin_frequency(env.band);
        if (fit.rt60 > 0.0) {
            sum += fit.rt60;
            ++est.bands_used;
        }
        est.per_band.push_back(fit);
    }
    if (est.bands_used == 0) throw EstimationFailure("no subband produced a valid decay fit");
    est.rt60 = sum / static_cast<double>(est.bands_used);
    return est;
}

RtEstimate estimate_rt60(const AudioBuffer& buf, const StftConfig& cfg, const RtOptions& opts) {
    return estimate_rt60(stft(buf, cfg), opts);
}

} // namespace echoless
