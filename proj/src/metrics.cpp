#include "echoless/metrics.hpp"

#include "echoless/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace echoless {

namespace {

double db_ratio(double threshold_db) { return std::pow(10.0, -threshold_db / 10.0); }

// 20 log10 |X| clipped to 50 dB below the maximum over the first `frames` frames.
std::vector<double> clipped_log_spectrum(const Spectrogram& s, std::size_t frames) {
    const std::size_t n = frames * s.bins();
    std::vector<double> out(n);
    double max_db = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(s.data()[i]);
        out[i] = mag > 0.0 ? 20.0 * std::log10(mag) : -std::numeric_limits<double>::infinity();
        max_db = std::max(max_db, out[i]);
    }
    const double floor = std::isfinite(max_db) ? max_db - kLsdDynamicRangeDb : 0.0;
    for (double& v : out) v = std::max(v, floor);
    return out;
}

} // namespace

LsdResult lsd(const Spectrogram& clean, const Spectrogram& test) {
    if (clean.bins() != test.bins()) throw InvalidArgument("LSD: spectrograms have different bin counts");
    LsdResult result;
    const std::size_t frames = std::min(clean.frames(), test.frames());
    result.truncated = clean.frames() != test.frames();
    const std::size_t bins = clean.bins();

    std::vector<double> frame_power(frames, 0.0);
    double max_power = 0.0;
    for (std::size_t l = 0; l < frames; ++l) {
        for (std::size_t k = 0; k < bins; ++k) frame_power[l] += std::norm(clean.at(k, l));
        max_power = std::max(max_power, frame_power[l]);
    }
    if (max_power <= 0.0) throw MetricUnavailable("LSD: clean spectrogram is silent");
    const double active = max_power * db_ratio(kActivityThresholdDb);

    const auto log_clean = clipped_log_spectrum(clean, frames);
    const auto log_test = clipped_log_spectrum(test, frames);
    result.per_frame_db.assign(frames, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0;
    for (std::size_t l = 0; l < frames; ++l) {
        if (frame_power[l] < active) continue;
        double acc = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double d = log_test[l * bins + k] - log_clean[l * bins + k];
            acc += d * d;
        }
        const double v = std::sqrt(acc / static_cast<double>(bins));
        result.per_frame_db[l] = v;
        sum += v;
        ++result.frames_used;
    }
    result.mean_db = sum / static_cast<double>(result.frames_used);
    return result;
}

RrResult rr(const Spectrogram& reverberant, const Spectrogram& processed, const Spectrogram* reference) {
    const Spectrogram& ref = reference ? *reference : reverberant;
    if (reverberant.bins() != processed.bins() || ref.bins() != reverberant.bins()) {
        throw InvalidArgument("RR: spectrograms have different bin counts");
    }
    RrResult result;
    const std::size_t frames = std::min({reverberant.frames(), processed.frames(), ref.frames()});
    result.truncated = reverberant.frames() != processed.frames() || ref.frames() != reverberant.frames();
    const std::size_t bins = reverberant.bins();

    double rev_max = 0.0;
    double ref_max = 0.0;
    for (std::size_t l = 0; l < frames; ++l) {
        for (std::size_t k = 0; k < bins; ++k) {
            rev_max = std::max(rev_max, std::norm(reverberant.at(k, l)));
            ref_max = std::max(ref_max, std::norm(ref.at(k, l)));
        }
    }
    const double band_floor = rev_max * db_ratio(kActivityThresholdDb);
    const double silence = ref_max * db_ratio(kActivityThresholdDb);

    double sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        double band_peak = 0.0;
        double rev_sum = 0.0;
        double proc_sum = 0.0;
        for (std::size_t l = 0; l < frames; ++l) {
            const double p = std::norm(reverberant.at(k, l));
            band_peak = std::max(band_peak, p);
            if (std::norm(ref.at(k, l)) < silence) {
                rev_sum += p;
                proc_sum += std::norm(processed.at(k, l));
            }
        }
        if (band_peak < band_floor || band_peak <= 0.0 || !(rev_sum > 0.0) || !(proc_sum > 0.0)) continue;
        const double v = 10.0 * std::log10(rev_sum / proc_sum);
        result.per_band.push_back({k, reverberant.bin_frequency(k), v});
        sum += v;
    }
    if (result.per_band.empty()) throw MetricUnavailable("RR: no tone-free subbands");
    result.mean_db = sum / static_cast<double>(result.per_band.size());
    return result;
}

double decode_rate(std::span<const bool> successes) {
    if (successes.empty()) throw InvalidArgument("decode_rate: no results");
    const auto ok = std::count(successes.begin(), successes.end(), true);
    return 100.0 * static_cast<double>(ok) / static_cast<double>(successes.size());
}

double decode_rate(std::span<const DecodeResult> results, std::span<const std::vector<std::uint8_t>> truths) {
    if (results.size() != truths.size()) throw InvalidArgument("decode_rate: result/truth count mismatch");
    std::vector<bool> ok;
    ok.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) ok.push_back(results[i].ok() && results[i].payload == truths[i]);
    if (ok.empty()) throw InvalidArgument("decode_rate: no results");
    const auto hits = std::count(ok.begin(), ok.end(), true);
    return 100.0 * static_cast<double>(hits) / static_cast<double>(ok.size());
}

MetricReport evaluate(const Spectrogram& clean, const Spectrogram& reverberant, const Spectrogram& processed) {
    const auto l = lsd(clean, processed);
    const auto r = rr(reverberant, processed, &clean);
    return MetricReport{l.mean_db, r.mean_db, r.per_band, l.frames_used, r.per_band.size()};
}

std::string to_json(const MetricReport& report) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : report.per_band_rr) {
        bands.push_back({{"band", b.band}, {"frequency_hz", b.frequency_hz}, {"rr_db", b.rr_db}});
    }
    nlohmann::json j{{"mean_lsd_db", report.mean_lsd},
                     {"mean_rr_db", report.mean_rr},
                     {"frames_used", report.frames_used},
                     {"bands_used", report.bands_used},
                     {"per_band_rr", std::move(bands)}};
    return j.dump(2);
}

std::string rr_csv(const RrResult& result) {
    std::string out = "band,frequency_hz,rr_db\n";
    char line[96];
    for (const auto& b : result.per_band) {
        std::snprintf(line, sizeof line, "%zu,%.4f,%.4f\n", b.band, b.frequency_hz, b.rr_db);
        out += line;
    }
    return out;
}

} // namespace echoless
