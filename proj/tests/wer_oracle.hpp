#pragma once

#include <map>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace testutil {

// Top-down memoised search over all alignments, tracking (S, D, I) directly.
// Among minimum-error alignments the one with the fewest insertions+deletions
// wins, which makes the triple unique.
inline std::tuple<std::size_t, std::size_t, std::size_t> wer_oracle(const std::vector<std::string>& hyp,
                                                                   const std::vector<std::string>& ref) {
    using Triple = std::tuple<std::size_t, std::size_t, std::size_t>;
    std::map<std::pair<std::size_t, std::size_t>, Triple> memo;
    auto better = [](const Triple& a, const Triple& b) {
        auto [sa, da, ia] = a;
        auto [sb, db, ib] = b;
        const auto ea = sa + da + ia, eb = sb + db + ib;
        if (ea != eb) return ea < eb;
        return da + ia < db + ib;
    };
    auto go = [&](auto&& self, std::size_t i, std::size_t j) -> Triple {
        if (i == ref.size()) return {0, 0, hyp.size() - j};
        if (j == hyp.size()) return {0, ref.size() - i, 0};
        if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
        auto [s1, d1, i1] = self(self, i + 1, j + 1);
        Triple best{s1 + (ref[i] == hyp[j] ? 0 : 1), d1, i1};
        auto [s2, d2, i2] = self(self, i + 1, j);
        if (Triple cand{s2, d2 + 1, i2}; better(cand, best)) best = cand;
        auto [s3, d3, i3] = self(self, i, j + 1);
        if (Triple cand{s3, d3, i3 + 1}; better(cand, best)) best = cand;
        memo[{i, j}] = best;
        return best;
    };
    return go(go, 0, 0);
}

inline std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t min_len, std::size_t max_len,
                                              std::size_t alphabet) {
    const std::size_t len = min_len + rng() % (max_len - min_len + 1);
    std::vector<std::string> out(len);
    for (auto& t : out) t = std::string(1, static_cast<char>('a' + rng() % alphabet));
    return out;
}

}  // namespace testutil
