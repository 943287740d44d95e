#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "exs/error.hpp"

namespace exs {

/// Pointwise relevance score. Higher is more relevant; never NaN or infinite.
class RankerScore {
public:
    constexpr RankerScore() = default;
    explicit RankerScore(double value) : value_(value) {
        if (!std::isfinite(value)) {
            throw Error(ErrorKind::Unprocessable, "ranker produced a non-finite score");
        }
    }

    constexpr double value() const noexcept { return value_; }

    friend constexpr auto operator<=>(const RankerScore&, const RankerScore&) = default;

private:
    double value_ = 0.0;
};

struct Query {
    std::string raw;
    std::vector<std::string> terms;
};

struct RankedEntry {
    std::string doc_id;
    RankerScore score;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Top-k documents for one query, best first. Ties are ordered by doc_id.
struct RankedList {
    Query query;
    std::vector<RankedEntry> entries;
    std::size_t k = 1;

    bool empty() const noexcept { return entries.empty(); }

    /// Depth actually available: min(k, number of candidates).
    std::size_t depth() const noexcept { return entries.size(); }

    const RankedEntry& top() const { return entries.front(); }
    const RankedEntry& kth() const { return entries.back(); }

    /// 1-based rank of a document, or 0 when it is not in the list.
    std::size_t rank_of(const std::string& doc_id) const {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].doc_id == doc_id) return i + 1;
        }
        return 0;
    }

    std::vector<RankerScore> scores() const {
        std::vector<RankerScore> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.score);
        return out;
    }

    /// The same query cut to its first `new_k` entries.
    RankedList truncated(std::size_t new_k) const {
        RankedList out{query, {}, new_k};
        auto n = std::min(new_k, entries.size());
        out.entries.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }
};

inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Sorts scored candidates into a RankedList of depth min(k, candidates).
/// The result does not depend on the order of `candidates`.
inline RankedList rank_documents(Query query, std::vector<RankedEntry> candidates, std::size_t k) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
    std::sort(candidates.begin(), candidates.end(), ranks_before);
    if (candidates.size() > k) candidates.resize(k);
    return RankedList{std::move(query), std::move(candidates), k};
}

}  // namespace exs
