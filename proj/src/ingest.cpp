#include "aip/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include <json.hpp>

#include "aip/error.hpp"

namespace aip {

namespace {

using nlohmann::json;

constexpr std::array<int, 5> kIngestRates = {8000, 16000, 22050, 44100, 48000};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::not_found, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string require_string(const json& doc, const char* field) {
    auto it = doc.find(field);
    if (it == doc.end() || it->is_null()) {
        fail(ErrorCode::validation, std::string("metadata: missing required field '") + field + "'");
    }
    if (!it->is_string()) {
        fail(ErrorCode::parse, std::string("metadata: field '") + field + "' must be a string");
    }
    auto value = it->get<std::string>();
    if (value.empty()) {
        fail(ErrorCode::validation, std::string("metadata: field '") + field + "' is empty");
    }
    return value;
}

std::uint64_t optional_count(const json& doc, const char* field) {
    auto it = doc.find(field);
    if (it == doc.end() || it->is_null()) return 0;
    if (!it->is_number_integer()) {
        fail(ErrorCode::parse, std::string("metadata: field '") + field + "' must be an integer");
    }
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    auto v = it->get<std::int64_t>();
    if (v < 0) {
        fail(ErrorCode::validation, std::string("metadata: field '") + field + "' is negative");
    }
    return static_cast<std::uint64_t>(v);
}

// Little-endian readers over a bounds-checked cursor.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

    bool has(std::size_t n) const { return remaining() >= n; }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }
    std::string tag() {
        need(4);
        std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
        pos_ += 4;
        return t;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }

private:
    void need(std::size_t n) const {
        if (!has(n)) fail(ErrorCode::corrupt_file, "wav: unexpected end of file");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct WavFormat {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

float decode_sample(const std::uint8_t* p, const WavFormat& fmt) {
    if (fmt.format == kFormatFloat) {
        std::uint32_t raw = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        if (!std::isfinite(v)) fail(ErrorCode::corrupt_file, "wav: non-finite float sample");
        return std::clamp(v, -1.0f, 1.0f);
    }
    if (fmt.bits == 8) {
        return (static_cast<float>(p[0]) - 128.0f) / 128.0f;
    }
    auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
    return static_cast<float>(v) / 32768.0f;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

bool is_supported_ingest_rate(int sample_rate_hz) {
    return std::find(kIngestRates.begin(), kIngestRates.end(), sample_rate_hz) != kIngestRates.end();
}

VideoMetadata parse_metadata(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, std::string("metadata: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::parse, "metadata: document must be a JSON object");

    VideoMetadata meta;
    meta.video_id = require_string(doc, "video_id");
    meta.title = require_string(doc, "title");

    if (auto it = doc.find("description"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) fail(ErrorCode::parse, "metadata: field 'description' must be a string");
        meta.description = it->get<std::string>();
    }

    auto dur = doc.find("duration_seconds");
    if (dur == doc.end() || dur->is_null()) {
        fail(ErrorCode::validation, "metadata: missing required field 'duration_seconds'");
    }
    if (!dur->is_number()) fail(ErrorCode::parse, "metadata: field 'duration_seconds' must be a number");
    meta.duration_seconds = dur->get<double>();
    if (!(meta.duration_seconds >= 0.0) || !std::isfinite(meta.duration_seconds)) {
        fail(ErrorCode::validation, "metadata: field 'duration_seconds' must be a non-negative number");
    }

    meta.view_count = optional_count(doc, "view_count");
    meta.like_count = optional_count(doc, "like_count");
    return meta;
}

VideoMetadata load_metadata(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    return parse_metadata(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (!r.has(12)) fail(ErrorCode::unsupported_format, "wav: file too short for a RIFF header");
    if (r.tag() != "RIFF") fail(ErrorCode::unsupported_format, "wav: missing RIFF signature");
    r.u32();  // riff size; unreliable in the wild, chunk sizes are checked instead
    if (r.tag() != "WAVE") fail(ErrorCode::unsupported_format, "wav: missing WAVE signature");

    std::optional<WavFormat> fmt;
    while (r.remaining() >= 8) {
        auto id = r.tag();
        auto size = r.u32();
        if (id == "fmt ") {
            if (size < 16) fail(ErrorCode::corrupt_file, "wav: fmt chunk too small");
            auto body = r.take(size);
            ByteReader f(body);
            WavFormat w;
            w.format = f.u16();
            w.channels = f.u16();
            w.sample_rate = f.u32();
            f.u32();  // byte rate
            w.block_align = f.u16();
            w.bits = f.u16();
            if (w.format == kFormatExtensible) {
                if (size < 40) fail(ErrorCode::corrupt_file, "wav: extensible fmt chunk too small");
                f.u16();  // cbSize
                f.u16();  // valid bits
                f.u32();  // channel mask
                w.format = f.u16();  // first two bytes of the sub-format GUID
            }
            if (w.format != kFormatPcm && w.format != kFormatFloat) {
                fail(ErrorCode::unsupported_format, "wav: compressed or unknown codec " + std::to_string(w.format));
            }
            bool bits_ok = (w.format == kFormatPcm && (w.bits == 8 || w.bits == 16)) ||
                           (w.format == kFormatFloat && w.bits == 32);
            if (!bits_ok) {
                fail(ErrorCode::unsupported_format, "wav: unsupported bit depth " + std::to_string(w.bits));
            }
            if (w.channels != 1 && w.channels != 2) {
                fail(ErrorCode::unsupported_format, "wav: unsupported channel count " + std::to_string(w.channels));
            }
            if (w.block_align != w.channels * (w.bits / 8)) {
                fail(ErrorCode::corrupt_file, "wav: inconsistent block alignment");
            }
            if (!is_supported_ingest_rate(static_cast<int>(w.sample_rate))) {
                fail(ErrorCode::unsupported_format, "wav: unsupported sample rate " + std::to_string(w.sample_rate));
            }
            fmt = w;
            if (size % 2 == 1 && r.remaining() > 0) r.skip(1);
        } else if (id == "data") {
            if (!fmt) fail(ErrorCode::corrupt_file, "wav: data chunk before fmt chunk");
            if (size > r.remaining()) fail(ErrorCode::corrupt_file, "wav: truncated data chunk");
            if (size % fmt->block_align != 0) fail(ErrorCode::corrupt_file, "wav: partial sample frame in data chunk");
            auto data = r.take(size);

            AudioBuffer out;
            out.sample_rate_hz = static_cast<int>(fmt->sample_rate);
            const std::size_t frames = size / fmt->block_align;
            const std::size_t width = fmt->bits / 8;
            out.samples.resize(frames);
            for (std::size_t i = 0; i < frames; ++i) {
                const std::uint8_t* frame = data.data() + i * fmt->block_align;
                if (fmt->channels == 1) {
                    out.samples[i] = decode_sample(frame, *fmt);
                } else {
                    float left = decode_sample(frame, *fmt);
                    float right = decode_sample(frame + width, *fmt);
                    out.samples[i] = 0.5f * (left + right);
                }
            }
            return out;
        } else {
            if (size > r.remaining()) fail(ErrorCode::corrupt_file, "wav: truncated '" + id + "' chunk");
            r.skip(size);
            if (size % 2 == 1 && r.remaining() > 0) r.skip(1);
        }
    }
    if (!fmt) fail(ErrorCode::unsupported_format, "wav: no fmt chunk");
    fail(ErrorCode::corrupt_file, "wav: no data chunk");
}

AudioBuffer load_audio(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    try {
        return decode_wav(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_wav(const std::vector<std::vector<float>>& channels, int sample_rate_hz,
                                     WavEncoding encoding) {
    if (channels.empty() || channels.size() > 2) fail(ErrorCode::contract, "encode_wav: need 1 or 2 channels");
    const std::size_t frames = channels.front().size();
    for (const auto& ch : channels) {
        if (ch.size() != frames) fail(ErrorCode::contract, "encode_wav: channel length mismatch");
    }
    const std::uint16_t nch = static_cast<std::uint16_t>(channels.size());
    const std::uint16_t bits = encoding == WavEncoding::pcm_u8 ? 8 : encoding == WavEncoding::pcm_s16 ? 16 : 32;
    const std::uint16_t block_align = static_cast<std::uint16_t>(nch * bits / 8);
    const auto data_size = static_cast<std::uint32_t>(frames * block_align);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_size);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, encoding == WavEncoding::float32 ? kFormatFloat : kFormatPcm);
    put_u16(out, nch);
    put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * block_align);
    put_u16(out, block_align);
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, data_size);

    for (std::size_t i = 0; i < frames; ++i) {
        for (const auto& ch : channels) {
            float s = std::clamp(ch[i], -1.0f, 1.0f);
            switch (encoding) {
                case WavEncoding::pcm_u8: {
                    long q = std::lround(s * 128.0f) + 128;
                    out.push_back(static_cast<std::uint8_t>(std::clamp(q, 0L, 255L)));
                    break;
                }
                case WavEncoding::pcm_s16: {
                    long q = std::clamp(std::lround(s * 32768.0f), -32768L, 32767L);
                    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
                    break;
                }
                case WavEncoding::float32: {
                    std::uint32_t raw;
                    std::memcpy(&raw, &s, sizeof raw);
                    put_u32(out, raw);
                    break;
                }
            }
        }
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer, WavEncoding encoding) {
    auto bytes = encode_wav({buffer.samples}, buffer.sample_rate_hz, encoding);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FixtureVideoSource::FixtureVideoSource(std::filesystem::path directory) : directory_(std::move(directory)) {}

FetchedVideo FixtureVideoSource::fetch(const std::string& video_id) const {
    std::error_code ec;
    if (!std::filesystem::is_directory(directory_, ec)) {
        fail(ErrorCode::source_unavailable, "fixture directory unavailable: " + directory_.string());
    }
    auto json_path = directory_ / (video_id + ".json");
    auto wav_path = directory_ / (video_id + ".wav");
    if (!std::filesystem::is_regular_file(json_path, ec)) {
        fail(ErrorCode::not_found, "video '" + video_id + "': no metadata at " + json_path.string());
    }
    if (!std::filesystem::is_regular_file(wav_path, ec)) {
        fail(ErrorCode::not_found, "video '" + video_id + "': no audio at " + wav_path.string());
    }
    FetchedVideo video{load_metadata(json_path), load_audio(wav_path)};
    if (video.metadata.video_id != video_id) {
        fail(ErrorCode::validation,
             "video '" + video_id + "': metadata declares video_id '" + video.metadata.video_id + "'");
    }
    return video;
}

FetchedVideo fetch_video(const std::string& video_id, const VideoSource& source) {
    if (video_id.empty()) fail(ErrorCode::validation, "video_id must be non-empty");
    if (video_id.find('/') != std::string::npos || video_id.find('\\') != std::string::npos || video_id == "." ||
        video_id == "..") {
        fail(ErrorCode::validation, "video_id '" + video_id + "' contains path characters");
    }
    return source.fetch(video_id);
}

}  // namespace aip
