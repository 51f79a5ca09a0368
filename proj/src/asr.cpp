#include "aip/asr.hpp"

#include <istream>

#include "aip/backend_protocol.hpp"
#include "aip/error.hpp"
#include "aip/textnorm.hpp"

namespace aip::asr {

namespace {

// Lexicographic alignment cost: total edits first, then indel count.
struct Cost {
    std::size_t edits = 0;
    std::size_t indels = 0;

    bool operator<(const Cost& o) const { return edits != o.edits ? edits < o.edits : indels < o.indels; }
};

}  // namespace

std::string join_segments(std::span<const Segment> segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out.push_back(' ');
        out += segments[i].text;
    }
    return out;
}

Transcript transcribe(std::span<const dsp::AudioChunk> chunks, backend::Client& client) {
    if (chunks.empty()) fail(ErrorCode::contract, "transcribe: no chunks");

    std::vector<backend::Payload> payloads;
    payloads.reserve(chunks.size());
    for (const auto& c : chunks) {
        payloads.emplace_back(backend::TranscribePayload{c.index, kStandardSampleRate, c.samples});
    }
    auto responses = client.call_batch(backend::Op::transcribe, std::move(payloads));

    Transcript t;
    t.segments.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        Segment s;
        s.chunk_index = chunks[i].index;
        if (responses[i].ok) {
            s.text = std::get<backend::TextResult>(responses[i].result).text;
        } else {
            s.failed = true;
            s.error = responses[i].error;
        }
        t.segments.push_back(std::move(s));
    }
    t.full_text = join_segments(t.segments);
    return t;
}

WerBreakdown wer(const Tokens& hyp, const Tokens& ref) {
    if (ref.empty()) fail(ErrorCode::undefined_reference, "wer: reference has no words");

    const std::size_t n = ref.size();
    const std::size_t m = hyp.size();
    // Rolling rows over the reference prefix.
    std::vector<Cost> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, j};
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = {i, i};
        for (std::size_t j = 1; j <= m; ++j) {
            Cost diag = prev[j - 1];
            if (ref[i - 1] != hyp[j - 1]) ++diag.edits;
            Cost del{prev[j].edits + 1, prev[j].indels + 1};
            Cost ins{cur[j - 1].edits + 1, cur[j - 1].indels + 1};
            Cost best = diag;
            if (del < best) best = del;
            if (ins < best) best = ins;
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    const Cost total = prev[m];

    // D - I = n - m and D + I = indels along any alignment.
    WerBreakdown out;
    out.reference_words = n;
    out.substitutions = total.edits - total.indels;
    const auto diff = static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(m);
    out.deletions = static_cast<std::size_t>((static_cast<std::ptrdiff_t>(total.indels) + diff) / 2);
    out.insertions = total.indels - out.deletions;
    return out;
}

WerBreakdown corpus_wer(std::span<const std::pair<Tokens, Tokens>> pairs) {
    WerBreakdown sum;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].second.empty()) {
            fail(ErrorCode::undefined_reference, "corpus_wer: pair " + std::to_string(i) + " has an empty reference");
        }
        auto b = wer(pairs[i].first, pairs[i].second);
        sum.substitutions += b.substitutions;
        sum.deletions += b.deletions;
        sum.insertions += b.insertions;
        sum.reference_words += b.reference_words;
    }
    return sum;
}

WerReport evaluate_wer_tsv(std::istream& in) {
    std::vector<std::pair<Tokens, Tokens>> pairs;
    WerReport report;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected reference<TAB>hypothesis");
        }
        std::string_view ref_raw(line.data(), tab);
        std::string_view hyp_raw(line.data() + tab + 1, line.size() - tab - 1);
        if (!text::is_valid_utf8(ref_raw) || !text::is_valid_utf8(hyp_raw)) {
            fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": invalid UTF-8");
        }
        auto ref = text::clean(ref_raw);
        auto hyp = text::clean(hyp_raw);
        if (ref.tokens.empty()) {
            ++report.skipped_empty_reference;
            continue;
        }
        pairs.emplace_back(std::move(hyp.tokens), std::move(ref.tokens));
    }
    report.pairs = pairs.size();
    report.total = corpus_wer(pairs);
    return report;
}

}  // namespace aip::asr
