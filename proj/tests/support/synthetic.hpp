#pragma once

// Planted rankers and synthetic documents whose ground truth is known.

#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "exs/corpus.hpp"
#include "exs/explainer.hpp"
#include "exs/rankers.hpp"

namespace exs::testing {

/// R(q, d) = number of distinct query terms present in d.
class QueryTermCountRanker final : public Ranker {
public:
    RankerScore score(const Query& query, const TokenizedDocument& doc) const override {
        std::set<std::string> seen;
        for (const auto& t : query.terms) {
            if (doc.vocabulary.contains(t)) seen.insert(t);
        }
        return RankerScore(static_cast<double>(seen.size()));
    }
};

/// R(q, d) = total occurrences of query terms in d.
class QueryTermOccurrenceRanker final : public Ranker {
public:
    RankerScore score(const Query& query, const TokenizedDocument& doc) const override {
        double total = 0.0;
        for (const auto& t : query.terms) total += static_cast<double>(doc.term_frequency(t));
        return RankerScore(total);
    }
};

/// R(q, d) = sum of fixed per-term weights over the distinct terms of d.
class TermWeightRanker final : public Ranker {
public:
    explicit TermWeightRanker(std::map<std::string, double> weights) : weights_(std::move(weights)) {}

    RankerScore score(const Query&, const TokenizedDocument& doc) const override {
        double total = 0.0;
        for (const auto& t : doc.vocabulary) {
            auto it = weights_.find(t);
            if (it != weights_.end()) total += it->second;
        }
        return RankerScore(total);
    }

private:
    std::map<std::string, double> weights_;
};

/// Multiplies another ranker's scores by a constant.
class ScaledRanker final : public Ranker {
public:
    ScaledRanker(const Ranker& base, double factor) : base_(&base), factor_(factor) {}

    RankerScore score(const Query& query, const TokenizedDocument& doc) const override {
        return RankerScore(base_->score(query, doc).value() * factor_);
    }

private:
    const Ranker* base_;
    double factor_;
};

inline std::string noise_term(std::size_t i) {
    return "w" + std::to_string(100 + i);
}

/// A document with `n_terms` distinct terms: the given query terms plus
/// filler terms, each filler repeated 1-3 times, in shuffled order.
inline TokenizedDocument planted_document(const std::string& doc_id, const std::vector<std::string>& query_terms,
                                          std::size_t n_terms, std::uint64_t seed,
                                          std::size_t filler_offset = 0) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> tokens(query_terms.begin(), query_terms.end());
    std::uniform_int_distribution<int> reps(1, 3);
    for (std::size_t i = 0; tokens.size() < 1000 && i + query_terms.size() < n_terms; ++i) {
        int r = reps(rng);
        for (int k = 0; k < r; ++k) tokens.push_back(noise_term(filler_offset + i));
    }
    std::shuffle(tokens.begin(), tokens.end(), rng);
    return make_tokenized(doc_id, std::move(tokens));
}

inline Query planted_query() { return make_query("rail strikes"); }

/// Top-3 list anchoring the planted document at 2 (both query terms), with
/// competitors scoring 1 and 0, so every converter sees a non-flat region.
inline RankedList planted_list(const Query& query, const std::string& doc_id) {
    return rank_documents(query,
                          {{doc_id, RankerScore(2.0)}, {"other-one", RankerScore(1.0)}, {"other-none", RankerScore(0.0)}},
                          3);
}

}  // namespace exs::testing
