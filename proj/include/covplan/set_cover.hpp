#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "covplan/rng.hpp"
#include "covplan/visibility.hpp"

namespace covplan {

struct SelectionResult {
    std::vector<int> selected;           // candidate ids in selection order
    std::vector<int> covered;            // sorted covered target ids
    double coverage_rate = 0.0;          // |covered| / coverable targets
    std::vector<int> reward_trace;       // marginal reward at each selection
};

namespace detail {

// Dense bitset rows make marginal-reward popcounts cheap.
struct BitRows {
    std::size_t words = 0;
    int n_targets = 0;
    std::vector<std::vector<std::uint64_t>> rows;
    std::vector<std::uint64_t> coverable; // union of all rows

    explicit BitRows(const CoverageMatrix& m) {
        n_targets = m.target_count;
        words = static_cast<std::size_t>((m.target_count + 63) / 64);
        rows.resize(m.rows.size());
        coverable.assign(words, 0);
        for (std::size_t c = 0; c < m.rows.size(); ++c) {
            rows[c].assign(words, 0);
            for (int t : m.rows[c]) {
                rows[c][static_cast<std::size_t>(t >> 6)] |= 1ull << (t & 63);
                coverable[static_cast<std::size_t>(t >> 6)] |= 1ull << (t & 63);
            }
        }
    }

    static int popcount(const std::vector<std::uint64_t>& v) {
        int n = 0;
        for (auto w : v) n += std::popcount(w);
        return n;
    }

    int marginal(std::size_t c, const std::vector<std::uint64_t>& covered) const {
        int n = 0;
        for (std::size_t w = 0; w < words; ++w) n += std::popcount(rows[c][w] & ~covered[w]);
        return n;
    }

    void accumulate(std::size_t c, std::vector<std::uint64_t>& covered) const {
        for (std::size_t w = 0; w < words; ++w) covered[w] |= rows[c][w];
    }
};

inline SelectionResult finish_result(const BitRows& bits, const std::vector<int>& selected,
                                     const std::vector<int>& trace) {
    SelectionResult r;
    r.selected = selected;
    r.reward_trace = trace;
    std::vector<std::uint64_t> covered(bits.words, 0);
    for (int c : selected) bits.accumulate(static_cast<std::size_t>(c), covered);
    for (int t = 0; t < bits.n_targets; ++t)
        if (covered[static_cast<std::size_t>(t >> 6)] >> (t & 63) & 1) r.covered.push_back(t);
    r.coverage_rate = bits.n_targets == 0
                          ? 0.0
                          : static_cast<double>(r.covered.size()) / bits.n_targets;
    return r;
}

} // namespace detail

// Greedy set cover: repeatedly take the candidate with the largest marginal
// reward (ties to the lowest id) until targets run out or no marginal
// reward exceeds min_reward. Lazy re-evaluation exploits that marginals
// only shrink, and matches eager recomputation exactly.
inline SelectionResult select_greedy(const CoverageMatrix& matrix, int min_reward) {
    if (min_reward < 0) throw std::runtime_error("select_greedy: min_reward must be >= 0");
    detail::BitRows bits(matrix);
    std::size_t n = bits.rows.size();

    struct Entry {
        int reward;
        int id;
        bool operator<(const Entry& o) const { // max-heap: higher reward, then lower id
            if (reward != o.reward) return reward < o.reward;
            return id > o.id;
        }
    };
    std::priority_queue<Entry> heap;
    for (std::size_t c = 0; c < n; ++c)
        heap.push({static_cast<int>(matrix.rows[c].size()), static_cast<int>(c)});

    std::vector<std::uint64_t> covered(bits.words, 0);
    std::vector<std::uint8_t> taken(n, 0);
    std::vector<int> selected, trace;
    int remaining = detail::BitRows::popcount(bits.coverable);

    while (remaining > 0 && !heap.empty()) {
        Entry top = heap.top();
        heap.pop();
        if (taken[static_cast<std::size_t>(top.id)]) continue;
        int fresh = bits.marginal(static_cast<std::size_t>(top.id), covered);
        if (fresh != top.reward) {
            heap.push({fresh, top.id});
            continue;
        }
        if (fresh <= min_reward) break; // strict: reward must exceed the cutoff
        taken[static_cast<std::size_t>(top.id)] = 1;
        bits.accumulate(static_cast<std::size_t>(top.id), covered);
        selected.push_back(top.id);
        trace.push_back(fresh);
        remaining -= fresh;
    }
    return detail::finish_result(bits, selected, trace);
}

// Greedy plus a redundancy-elimination pass: as long as some selected
// candidate's covered set is fully covered by the other selections, drop
// the one with the smallest own coverage. Coverage is unchanged.
inline SelectionResult select_backtracking(const CoverageMatrix& matrix, int min_reward) {
    SelectionResult greedy = select_greedy(matrix, min_reward);
    detail::BitRows bits(matrix);

    std::vector<int> kept = greedy.selected;
    std::vector<int> trace = greedy.reward_trace;
    for (;;) {
        int drop_pos = -1, drop_size = 0;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            std::vector<std::uint64_t> others(bits.words, 0);
            for (std::size_t j = 0; j < kept.size(); ++j)
                if (j != i) bits.accumulate(static_cast<std::size_t>(kept[j]), others);
            int uncovered = bits.marginal(static_cast<std::size_t>(kept[i]), others);
            if (uncovered > 0) continue; // contributes uniquely, keep
            int own = static_cast<int>(matrix.rows[static_cast<std::size_t>(kept[i])].size());
            if (drop_pos < 0 || own < drop_size ||
                (own == drop_size && kept[i] < kept[static_cast<std::size_t>(drop_pos)])) {
                drop_pos = static_cast<int>(i);
                drop_size = own;
            }
        }
        if (drop_pos < 0) break;
        kept.erase(kept.begin() + drop_pos);
        trace.erase(trace.begin() + drop_pos);
    }
    SelectionResult r = detail::finish_result(bits, kept, trace);
    return r;
}

// Randomized greedy: each step ranks candidates by marginal reward and
// picks rank k with probability proportional to exp(-lambda * k). The best
// of `trials` independent rollouts wins (highest coverage, then fewest
// viewpoints). Deterministic per seed; trial t uses seed + t.
inline SelectionResult select_probabilistic(const CoverageMatrix& matrix, int min_reward,
                                            double lambda, int trials, std::uint64_t seed) {
    if (lambda <= 0.0) throw std::runtime_error("select_probabilistic: lambda must be positive");
    if (trials < 1) throw std::runtime_error("select_probabilistic: trials must be >= 1");
    detail::BitRows bits(matrix);
    std::size_t n = bits.rows.size();

    SelectionResult best;
    bool have_best = false;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(seed + static_cast<std::uint64_t>(trial));
        std::vector<std::uint64_t> covered(bits.words, 0);
        std::vector<std::uint8_t> taken(n, 0);
        std::vector<int> selected, trace;
        int remaining = detail::BitRows::popcount(bits.coverable);

        while (remaining > 0) {
            // rank by (marginal desc, id asc), keeping only useful candidates
            std::vector<std::pair<int, int>> ranked; // (-marginal, id)
            for (std::size_t c = 0; c < n; ++c) {
                if (taken[c]) continue;
                int m = bits.marginal(c, covered);
                if (m > min_reward) ranked.emplace_back(-m, static_cast<int>(c));
            }
            if (ranked.empty()) break;
            std::sort(ranked.begin(), ranked.end());

            // exponential rank weights; the tail beyond ~60/lambda is
            // numerically zero so it can be truncated
            std::size_t limit = std::min<std::size_t>(
                ranked.size(), static_cast<std::size_t>(60.0 / lambda) + 1);
            double total = 0.0;
            std::vector<double> weight(limit);
            for (std::size_t k = 0; k < limit; ++k) {
                weight[k] = std::exp(-lambda * static_cast<double>(k));
                total += weight[k];
            }
            double pick = rng.uniform() * total;
            std::size_t chosen = limit - 1;
            double acc = 0.0;
            for (std::size_t k = 0; k < limit; ++k) {
                acc += weight[k];
                if (pick < acc) { chosen = k; break; }
            }
            int id = ranked[chosen].second;
            int marginal = -ranked[chosen].first;
            taken[static_cast<std::size_t>(id)] = 1;
            bits.accumulate(static_cast<std::size_t>(id), covered);
            selected.push_back(id);
            trace.push_back(marginal);
            remaining -= marginal;
        }

        SelectionResult r = detail::finish_result(bits, selected, trace);
        if (!have_best || r.coverage_rate > best.coverage_rate ||
            (r.coverage_rate == best.coverage_rate && r.selected.size() < best.selected.size())) {
            best = std::move(r);
            have_best = true;
        }
    }
    return best;
}

} // namespace covplan
