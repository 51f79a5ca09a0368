#include "aip/audio_dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "aip/error.hpp"

namespace aip::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

double kaiser(double t, double half_width, double beta) {
    double r = t / half_width;
    if (r < -1.0 || r > 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

// Filter taps per output phase; taps for phase p sit at input offsets
// j = -(kTapsPerPhase/2 - 1) .. kTapsPerPhase/2 relative to floor(n*M/L).
struct PolyphaseFilter {
    std::size_t up = 1;
    std::size_t down = 1;
    std::vector<double> taps;  // up x kTapsPerPhase

    PolyphaseFilter(std::size_t up_factor, std::size_t down_factor) : up(up_factor), down(down_factor) {
        const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
        const double half = kTapsPerPhase / 2.0;
        taps.resize(up * kTapsPerPhase);
        for (std::size_t p = 0; p < up; ++p) {
            const double frac = static_cast<double>(p) / static_cast<double>(up);
            double sum = 0.0;
            for (int j = 0; j < kTapsPerPhase; ++j) {
                const double t = static_cast<double>(j - (kTapsPerPhase / 2 - 1)) - frac;
                const double h = 2.0 * cutoff * sinc(2.0 * cutoff * t) * kaiser(t, half, kKaiserBeta);
                taps[p * kTapsPerPhase + j] = h;
                sum += h;
            }
            // unity DC gain per phase
            for (int j = 0; j < kTapsPerPhase; ++j) taps[p * kTapsPerPhase + j] /= sum;
        }
    }
};

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using FftwReal = std::unique_ptr<double[], FftwFree>;
using FftwComplex = std::unique_ptr<fftw_complex[], FftwFree>;

// FFTW planning is not thread-safe; execution with fresh aligned arrays is.
fftw_plan shared_plan() {
    static std::once_flag once;
    static fftw_plan plan = nullptr;
    std::call_once(once, [] {
        FftwReal in(static_cast<double*>(fftw_malloc(sizeof(double) * kFftSize)));
        FftwComplex out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * kFftBins)));
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(kFftSize), in.get(), out.get(), FFTW_ESTIMATE);
    });
    return plan;
}

const std::vector<double>& hann_window() {
    static const std::vector<double> window = [] {
        std::vector<double> w(kWindowSamples);
        for (std::size_t n = 0; n < kWindowSamples; ++n) {
            w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(kWindowSamples));
        }
        return w;
    }();
    return window;
}

const std::vector<double>& cached_filterbank() {
    static const std::vector<double> fb = mel_filterbank();
    return fb;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail(ErrorCode::corrupt_file, "mel matrix: truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::size_t standardized_length(std::size_t input_len, int rate_hz) {
    if (rate_hz == kStandardSampleRate) return input_len;
    const auto g = static_cast<std::size_t>(std::gcd(kStandardSampleRate, rate_hz));
    const std::size_t up = kStandardSampleRate / g;
    const std::size_t down = static_cast<std::size_t>(rate_hz) / g;
    return (input_len * up + down - 1) / down;
}

AudioBuffer standardize(const AudioBuffer& buffer) {
    if (buffer.sample_rate_hz <= 0) {
        fail(ErrorCode::contract, "standardize: sample rate must be positive");
    }
    if (buffer.sample_rate_hz == kStandardSampleRate) return buffer;

    AudioBuffer out;
    out.sample_rate_hz = kStandardSampleRate;
    if (buffer.samples.empty()) return out;

    const auto g = static_cast<std::size_t>(std::gcd(kStandardSampleRate, buffer.sample_rate_hz));
    const PolyphaseFilter filter(kStandardSampleRate / g, static_cast<std::size_t>(buffer.sample_rate_hz) / g);

    const auto& x = buffer.samples;
    const auto n_in = static_cast<std::ptrdiff_t>(x.size());
    const std::size_t n_out = standardized_length(x.size(), buffer.sample_rate_hz);
    out.samples.resize(n_out);

    constexpr std::ptrdiff_t kLead = kTapsPerPhase / 2 - 1;
    for (std::size_t n = 0; n < n_out; ++n) {
        const std::size_t pos = n * filter.down;
        const auto base = static_cast<std::ptrdiff_t>(pos / filter.up);
        const std::size_t phase = pos % filter.up;
        const double* h = filter.taps.data() + phase * kTapsPerPhase;

        double acc = 0.0;
        const std::ptrdiff_t first = base - kLead;
        const std::ptrdiff_t j_begin = std::max<std::ptrdiff_t>(0, -first);
        const std::ptrdiff_t j_end = std::min<std::ptrdiff_t>(kTapsPerPhase, n_in - first);
        for (std::ptrdiff_t j = j_begin; j < j_end; ++j) {
            acc += h[j] * static_cast<double>(x[static_cast<std::size_t>(first + j)]);
        }
        out.samples[n] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
    }
    return out;
}

std::vector<AudioChunk> chunk(const AudioBuffer& buffer) {
    if (buffer.sample_rate_hz != kStandardSampleRate) {
        fail(ErrorCode::contract, "chunk: expected 16000 Hz audio, got " + std::to_string(buffer.sample_rate_hz));
    }
    const auto& s = buffer.samples;
    const std::size_t count = (s.size() + kChunkSamples - 1) / kChunkSamples;
    std::vector<AudioChunk> chunks(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t begin = i * kChunkSamples;
        const std::size_t end = std::min(s.size(), begin + kChunkSamples);
        auto& c = chunks[i];
        c.index = i;
        c.valid_samples = end - begin;
        c.samples.assign(kChunkSamples, 0.0f);
        std::copy(s.begin() + static_cast<std::ptrdiff_t>(begin), s.begin() + static_cast<std::ptrdiff_t>(end),
                  c.samples.begin());
    }
    return chunks;
}

std::vector<float> reassemble(std::span<const AudioChunk> chunks) {
    std::vector<float> out;
    for (const auto& c : chunks) {
        out.insert(out.end(), c.samples.begin(), c.samples.begin() + static_cast<std::ptrdiff_t>(c.valid_samples));
    }
    return out;
}

double hz_to_mel(double hz) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (hz < min_log_hz) return hz / f_sp;
    return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (mel < min_log_mel) return mel * f_sp;
    return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

std::vector<double> mel_filterbank() {
    constexpr double sr = kStandardSampleRate;
    constexpr double fmax = sr / 2.0;
    const double mel_max = hz_to_mel(fmax);

    std::vector<double> points(kMelBins + 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        points[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(kMelBins + 1));
    }

    std::vector<double> fb(kMelBins * kFftBins, 0.0);
    for (std::size_t m = 0; m < kMelBins; ++m) {
        const double lo = points[m], center = points[m + 1], hi = points[m + 2];
        const double enorm = 2.0 / (hi - lo);
        for (std::size_t k = 0; k < kFftBins; ++k) {
            const double f = sr * static_cast<double>(k) / static_cast<double>(kFftSize);
            const double rising = (f - lo) / (center - lo);
            const double falling = (hi - f) / (hi - center);
            fb[m * kFftBins + k] = std::max(0.0, std::min(rising, falling)) * enorm;
        }
    }
    return fb;
}

MelSpectrogram log10_mel_energies(std::span<const float> samples) {
    const std::size_t frames = (samples.size() + kHopSamples - 1) / kHopSamples;
    MelSpectrogram mel;
    mel.frames = frames;
    mel.n_mels = kMelBins;
    mel.values.resize(frames * kMelBins);

    const auto& window = hann_window();
    const auto& fb = cached_filterbank();
    fftw_plan plan = shared_plan();
    FftwReal in(static_cast<double*>(fftw_malloc(sizeof(double) * kFftSize)));
    FftwComplex out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * kFftBins)));
    std::vector<double> power(kFftBins);

    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t start = t * kHopSamples;
        for (std::size_t n = 0; n < kFftSize; ++n) {
            const std::size_t idx = start + n;
            const double s = (n < kWindowSamples && idx < samples.size()) ? samples[idx] : 0.0;
            in[n] = s * (n < kWindowSamples ? window[n] : 0.0);
        }
        fftw_execute_dft_r2c(plan, in.get(), out.get());
        for (std::size_t k = 0; k < kFftBins; ++k) {
            power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
        for (std::size_t m = 0; m < kMelBins; ++m) {
            const double* row = fb.data() + m * kFftBins;
            double e = 0.0;
            for (std::size_t k = 0; k < kFftBins; ++k) e += row[k] * power[k];
            mel.values[t * kMelBins + m] = static_cast<float>(std::log10(std::max(e, kLogFloor)));
        }
    }
    return mel;
}

MelSpectrogram log_mel(std::span<const float> samples) {
    auto mel = log10_mel_energies(samples);
    if (mel.values.empty()) return mel;
    const float peak = *std::max_element(mel.values.begin(), mel.values.end());
    const float floor = peak - static_cast<float>(kDynamicRangeLog10);
    for (auto& v : mel.values) v = (std::max(v, floor) + 4.0f) / 4.0f;
    return mel;
}

MelSpectrogram log_mel(const AudioChunk& chunk) {
    if (chunk.samples.size() != kChunkSamples) {
        fail(ErrorCode::contract, "log_mel: chunk must hold exactly 480000 samples");
    }
    return log_mel(std::span<const float>(chunk.samples));
}

void write_mel_matrix(const std::filesystem::path& path, const MelSpectrogram& mel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    put_u32(out, static_cast<std::uint32_t>(mel.frames));
    put_u32(out, static_cast<std::uint32_t>(mel.n_mels));
    put_u32(out, kMelFileMagic);
    for (float v : mel.values) {
        std::uint32_t raw;
        std::memcpy(&raw, &v, sizeof raw);
        put_u32(out, raw);
    }
}

MelSpectrogram read_mel_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot open " + path.string());
    MelSpectrogram mel;
    mel.frames = get_u32(in);
    mel.n_mels = get_u32(in);
    if (get_u32(in) != kMelFileMagic) fail(ErrorCode::unsupported_format, "mel matrix: bad magic");
    mel.values.resize(mel.frames * mel.n_mels);
    for (auto& v : mel.values) {
        std::uint32_t raw = get_u32(in);
        std::memcpy(&v, &raw, sizeof v);
    }
    return mel;
}

}  // namespace aip::dsp
