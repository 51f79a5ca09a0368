#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aip/ingest.hpp"

namespace aip::dsp {

inline constexpr std::size_t kChunkSeconds = 30;
inline constexpr std::size_t kChunkSamples = kChunkSeconds * kStandardSampleRate;  // 480000

inline constexpr std::size_t kMelBins = 80;
inline constexpr std::size_t kHopSamples = 160;
inline constexpr std::size_t kWindowSamples = 400;
inline constexpr std::size_t kFftSize = 400;
inline constexpr std::size_t kFftBins = kFftSize / 2 + 1;
inline constexpr std::size_t kFramesPerChunk = kChunkSamples / kHopSamples;  // 3000

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kDynamicRangeLog10 = 8.0;

// Resampler design constants.
inline constexpr int kTapsPerPhase = 64;
inline constexpr double kKaiserBeta = 8.6;

struct AudioChunk {
    std::size_t index = 0;
    std::vector<float> samples;  // always kChunkSamples long
    std::size_t valid_samples = 0;  // leading samples that came from the source

    double start_offset_seconds() const { return static_cast<double>(index * kChunkSeconds); }
};

// Row-major frames x kMelBins.
struct MelSpectrogram {
    std::size_t frames = 0;
    std::size_t n_mels = kMelBins;
    std::vector<float> values;

    float at(std::size_t frame, std::size_t mel) const { return values[frame * n_mels + mel]; }
};

// Polyphase windowed-sinc resampling to 16 kHz. Returns the input unchanged
// (bit-equal) when it is already at 16 kHz. Output is clamped to [-1, 1].
AudioBuffer standardize(const AudioBuffer& buffer);

// Length produced by standardize() for `input_len` samples at `rate_hz`.
std::size_t standardized_length(std::size_t input_len, int rate_hz);

// Non-overlapping 30 s windows; the last one is zero-padded.
std::vector<AudioChunk> chunk(const AudioBuffer& buffer);

// Concatenate chunk payloads and drop tail padding.
std::vector<float> reassemble(std::span<const AudioChunk> chunks);

// Slaney-style mel filterbank (kMelBins x kFftBins, row-major), 0..8000 Hz,
// area-normalized. Same construction as the reference ASR front end.
std::vector<double> mel_filterbank();
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Hann(400) / hop 160 / |FFT|^2 / mel / log10 floor 1e-10 /
// clamp to max-8 / (x+4)/4. Frames start at k*hop with zero padding past the
// end, so a full chunk yields exactly 3000 frames.
MelSpectrogram log_mel(const AudioChunk& chunk);
MelSpectrogram log_mel(std::span<const float> samples);

// Same pipeline, stopping before the per-chunk clamp and affine map.
MelSpectrogram log10_mel_energies(std::span<const float> samples);

// Debug dump: u32 frames, u32 mels, u32 magic, then row-major float32, all
// little-endian.
inline constexpr std::uint32_t kMelFileMagic = 0x4C454D41;  // "AMEL"
void write_mel_matrix(const std::filesystem::path& path, const MelSpectrogram& mel);
MelSpectrogram read_mel_matrix(const std::filesystem::path& path);

}  // namespace aip::dsp
