#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aip {

struct VideoMetadata {
    std::string video_id;
    std::string title;
    std::string description;
    double duration_seconds = 0.0;
    std::uint64_t view_count = 0;
    std::uint64_t like_count = 0;

    bool operator==(const VideoMetadata&) const = default;
};

// Mono PCM, samples in [-1, 1].
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate_hz = 16000;

    double duration_seconds() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
    bool operator==(const AudioBuffer&) const = default;
};

inline constexpr int kStandardSampleRate = 16000;

bool is_supported_ingest_rate(int sample_rate_hz);

// Parses a metadata JSON document. Throws Error{parse} naming the field on
// type errors, Error{validation} on missing/empty video_id or title.
VideoMetadata parse_metadata(std::string_view json_text);
VideoMetadata load_metadata(const std::filesystem::path& path);

// RIFF/WAVE decoding: PCM u8/s16 or IEEE float32, one or two channels.
// Stereo is averaged to mono; integers are scaled by 1/128 (u8, after
// re-centering) or 1/32768 (s16).
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
AudioBuffer load_audio(const std::filesystem::path& path);

enum class WavEncoding { pcm_u8, pcm_s16, float32 };

// Writer used by fixtures and tests. `channels` holds one sample vector per
// channel (1 or 2), all equal length.
std::vector<std::uint8_t> encode_wav(const std::vector<std::vector<float>>& channels,
                                     int sample_rate_hz, WavEncoding encoding);
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer,
               WavEncoding encoding = WavEncoding::pcm_s16);

struct FetchedVideo {
    VideoMetadata metadata;
    AudioBuffer audio;
};

// Seam between the pipeline and wherever videos come from.
class VideoSource {
public:
    virtual ~VideoSource() = default;
    virtual FetchedVideo fetch(const std::string& video_id) const = 0;
};

// Offline adapter: <dir>/<id>.json + <dir>/<id>.wav. Stateless, so
// concurrent fetches are safe.
class FixtureVideoSource final : public VideoSource {
public:
    explicit FixtureVideoSource(std::filesystem::path directory);
    FetchedVideo fetch(const std::string& video_id) const override;

    const std::filesystem::path& directory() const { return directory_; }

private:
    std::filesystem::path directory_;
};

// Validates the id before touching the adapter.
FetchedVideo fetch_video(const std::string& video_id, const VideoSource& source);

}  // namespace aip
