#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aip/audio_dsp.hpp"

namespace aip::backend {
class Client;
}

namespace aip::asr {

struct Segment {
    std::size_t chunk_index = 0;
    std::string text;
    bool failed = false;
    std::string error;  // backend message when failed

    bool operator==(const Segment&) const = default;
};

struct Transcript {
    std::vector<Segment> segments;  // ascending, unique chunk_index
    std::string full_text;

    bool operator==(const Transcript&) const = default;
};

// Segment texts joined in order with single spaces.
std::string join_segments(std::span<const Segment> segments);

// One backend request per chunk, pipelined through the client. A chunk the
// backend refuses becomes an empty, flagged segment; stream loss before any
// response and protocol violations propagate as errors.
Transcript transcribe(std::span<const dsp::AudioChunk> chunks, backend::Client& client);

struct WerBreakdown {
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t reference_words = 0;

    std::size_t errors() const { return substitutions + deletions + insertions; }
    double wer() const {
        return reference_words ? static_cast<double>(errors()) / static_cast<double>(reference_words) : 0.0;
    }
    bool operator==(const WerBreakdown&) const = default;
};

using Tokens = std::vector<std::string>;

// Minimum word edit distance with unit costs. Among optimal alignments the one
// with the fewest insertions+deletions is chosen, so a substitution always
// wins over a deletion/insertion pair. Throws Error{undefined_reference} for
// an empty reference.
WerBreakdown wer(const Tokens& hypothesis, const Tokens& reference);

// Micro-average: sums S, D, I, N over pairs.
WerBreakdown corpus_wer(std::span<const std::pair<Tokens, Tokens>> hypothesis_reference_pairs);

struct WerReport {
    WerBreakdown total;
    std::size_t pairs = 0;  // pairs that entered the sums
    std::size_t skipped_empty_reference = 0;
};

// Harness over `reference<TAB>hypothesis` lines: both columns are cleaned and
// tokenized; pairs with an empty cleaned reference are skipped and counted.
// Malformed lines throw Error{parse} with the line number.
WerReport evaluate_wer_tsv(std::istream& in);

}  // namespace aip::asr
