#include "echoless/wav.hpp"

#include "echoless/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

namespace echoless {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

} // namespace

WavData parse_wav(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file");
    }

    std::optional<FmtChunk> fmt;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t size = le32(hdr + 4);
        const std::size_t body = pos + 8;
        const std::size_t avail = bytes.size() - body;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (size < 16 || size > avail) throw FormatError("truncated fmt chunk");
            const unsigned char* p = bytes.data() + body;
            FmtChunk f;
            f.format = le16(p);
            f.channels = le16(p + 2);
            f.sample_rate = le32(p + 4);
            f.bits = le16(p + 14);
            if (f.format == kFormatExtensible) {
                if (size < 40) throw FormatError("truncated WAVE_FORMAT_EXTENSIBLE header");
                f.format = le16(p + 24);
            }
            fmt = f;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            // Streams written without a final size often carry 0 or 0xFFFFFFFF.
            data_size = std::min<std::size_t>(size, avail);
            break;
        }
        pos = body + size + (size & 1u);
    }

    if (!fmt) throw FormatError("missing fmt chunk");
    if (!data) throw FormatError("missing data chunk");
    if (fmt->channels == 0) throw FormatError("zero channels");
    if (fmt->sample_rate == 0 || fmt->sample_rate > 1'000'000) throw FormatError("invalid sample rate");

    SampleFormat sf;
    if (fmt->format == kFormatPcm && fmt->bits == 16) {
        sf = SampleFormat::pcm16;
    } else if (fmt->format == kFormatFloat && fmt->bits == 32) {
        sf = SampleFormat::float32;
    } else {
        throw FormatError("unsupported codec (format " + std::to_string(fmt->format) + ", " +
                          std::to_string(fmt->bits) + " bits); only PCM16 and float32 are read");
    }

    const std::size_t width = sf == SampleFormat::pcm16 ? 2 : 4;
    const std::size_t frame_bytes = width * fmt->channels;
    const std::size_t frames = data_size / frame_bytes;
    std::vector<double> mono(frames, 0.0);
    const double inv_channels = 1.0 / fmt->channels;
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < fmt->channels; ++c) {
            const unsigned char* p = data + i * frame_bytes + c * width;
            if (sf == SampleFormat::pcm16) {
                acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
            } else {
                const float v = std::bit_cast<float>(le32(p));
                if (!std::isfinite(v)) throw FormatError("non-finite float sample");
                acc += v;
            }
        }
        mono[i] = fmt->channels == 1 ? acc : acc * inv_channels;
    }

    WavData out{AudioBuffer(std::move(mono), static_cast<int>(fmt->sample_rate)), fmt->channels, sf, {}};
    if (fmt->channels > 1) {
        out.warnings.push_back(std::to_string(fmt->channels) + " channels averaged to mono");
    }
    return out;
}

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_wav(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<unsigned char> encode_wav(const AudioBuffer& buf, SampleFormat format, WavWriteStats* stats) {
    const std::uint16_t bits = format == SampleFormat::pcm16 ? 16 : 32;
    const std::uint32_t width = bits / 8;
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(buf.size() * width);
    const auto rate = static_cast<std::uint32_t>(buf.sample_rate());

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, format == SampleFormat::pcm16 ? kFormatPcm : kFormatFloat);
    put16(out, 1);
    put32(out, rate);
    put32(out, rate * width);
    put16(out, static_cast<std::uint16_t>(width));
    put16(out, bits);
    put_tag(out, "data");
    put32(out, data_bytes);

    std::size_t clipped = 0;
    for (double v : buf.samples()) {
        if (v > 1.0 || v < -1.0) {
            ++clipped;
            v = std::clamp(v, -1.0, 1.0);
        }
        if (format == SampleFormat::pcm16) {
            const long q = std::lround(v * 32768.0);
            put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
        } else {
            put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    if (stats) stats->clipped = clipped;
    return out;
}

WavWriteStats write_wav(const std::filesystem::path& path, const AudioBuffer& buf, SampleFormat format) {
    WavWriteStats stats;
    const auto bytes = encode_wav(buf, format, &stats);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed: " + path.string());
    return stats;
}

} // namespace echoless
