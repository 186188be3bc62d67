#pragma once

#include "echoless/audio.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace echoless {

enum class SampleFormat { pcm16, float32 };

struct WavData {
    AudioBuffer audio;
    int channels = 1;
    SampleFormat format = SampleFormat::pcm16;
    std::vector<std::string> warnings;
};

/// Reads RIFF/WAVE PCM16 or IEEE float32. Multichannel input is averaged to
/// mono and a warning is attached. Throws FormatError on anything else.
WavData read_wav(const std::filesystem::path& path);

/// Parses an in-memory WAV image; same rules as read_wav.
WavData parse_wav(const std::vector<unsigned char>& bytes);

struct WavWriteStats {
    std::size_t clipped = 0;
};

/// Writes mono audio; samples outside [-1, 1] are clipped and counted.
/// Throws FormatError if the file cannot be written.
WavWriteStats write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                        SampleFormat format = SampleFormat::float32);

std::vector<unsigned char> encode_wav(const AudioBuffer& buf, SampleFormat format,
                                      WavWriteStats* stats = nullptr);

} // namespace echoless
