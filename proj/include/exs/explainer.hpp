#pragma once

// Local surrogate explanations for pointwise rankers.
//
// A document is perturbed by dropping whole terms, every perturbation is
// scored by the black-box ranker, scores are turned into P(relevant) by one of
// three converters anchored on the current top-k list, and a locality-weighted
// ridge regression over term-presence features is fitted to those labels.
// Coefficients are reported so that a positive weight means the term's
// presence pushes the document toward the relevant class.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "exs/corpus.hpp"
#include "exs/error.hpp"
#include "exs/ranked_list.hpp"
#include "exs/rankers.hpp"

namespace exs {

enum class ConverterKind { TopKBinary, ScoreBased, RankBased };

inline constexpr std::string_view to_wire(ConverterKind kind) {
    switch (kind) {
        case ConverterKind::TopKBinary: return "topk";
        case ConverterKind::ScoreBased: return "score";
        case ConverterKind::RankBased: return "rank";
    }
    return "topk";
}

inline ConverterKind parse_converter(std::string_view wire) {
    if (wire == "topk") return ConverterKind::TopKBinary;
    if (wire == "score") return ConverterKind::ScoreBased;
    if (wire == "rank") return ConverterKind::RankBased;
    throw Error(ErrorKind::InvalidArgument,
                "unknown converter '" + std::string(wire) + "'; available: topk, score, rank");
}

struct ExplanationParams {
    std::size_t n_samples = 2000;
    std::size_t n_words = 10;
    ConverterKind converter = ConverterKind::TopKBinary;
    double kernel_width = 0.25;
    double regularization = 1.0;
    std::uint64_t seed = 0;
    /// Threads used to score perturbations. Results do not depend on it.
    unsigned workers = 1;

    void validate_fit_settings() const {
        if (n_samples < 10) throw Error(ErrorKind::InvalidArgument, "n_samples must be at least 10");
        if (!(kernel_width > 0.0) || !std::isfinite(kernel_width)) {
            throw Error(ErrorKind::InvalidArgument, "kernel_width must be positive");
        }
        if (!(regularization > 0.0) || !std::isfinite(regularization)) {
            throw Error(ErrorKind::InvalidArgument, "regularization must be positive");
        }
    }

    void validate(std::size_t vocabulary_size) const {
        validate_fit_settings();
        if (n_words < 1 || n_words > vocabulary_size) {
            throw Error(ErrorKind::InvalidArgument, "n_words must be between 1 and the document vocabulary size (" +
                                                        std::to_string(vocabulary_size) + ")");
        }
    }
};

/// One word-removal variant d' of a document. `presence` is indexed like the
/// sorted vocabulary of the source document.
struct PerturbedSample {
    std::vector<std::uint8_t> presence;
    std::vector<std::string> kept_tokens;
    RankerScore score;
    double label = 0.0;
    double weight = 1.0;

    std::size_t kept_terms() const {
        return static_cast<std::size_t>(std::count(presence.begin(), presence.end(), std::uint8_t{1}));
    }
};

struct ExplanationModel {
    std::map<std::string, double> coefficients;
    double intercept = 0.0;
    double local_fit_r2 = 0.0;
    std::size_t n_samples_used = 0;

    friend bool operator==(const ExplanationModel&, const ExplanationModel&) = default;
};

enum class ClassLabel { Relevant, Irrelevant };

inline constexpr std::string_view to_wire(ClassLabel label) {
    return label == ClassLabel::Relevant ? "RELEVANT" : "IRRELEVANT";
}

struct ExplanationEntry {
    std::string term;
    double weight = 0.0;
    ClassLabel class_label = ClassLabel::Irrelevant;

    friend bool operator==(const ExplanationEntry&, const ExplanationEntry&) = default;
};

struct Explanation {
    std::string doc_id;
    std::string query;
    std::vector<ExplanationEntry> entries;
    ConverterKind converter = ConverterKind::TopKBinary;
    double fit_r2 = 0.0;
    std::uint64_t seed = 0;
    /// Set for pairwise explanations: the lower-ranked document.
    std::optional<std::string> compared_to;

    friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct IntentExplanation {
    std::string query;
    std::vector<ExplanationEntry> entries;
    std::size_t docs_aggregated = 0;
    ConverterKind converter = ConverterKind::TopKBinary;
    std::uint64_t seed = 0;

    friend bool operator==(const IntentExplanation&, const IntentExplanation&) = default;
};

// ---- perturbation ------------------------------------------------------------

inline std::vector<std::string> sorted_vocabulary(const TokenizedDocument& doc) {
    return {doc.vocabulary.begin(), doc.vocabulary.end()};
}

/// Draws `n_samples` perturbations. Each drops z ~ Uniform{1..m-1} distinct
/// vocabulary terms (all of their occurrences). The unperturbed document is
/// never among them. Scores, labels and weights are left unset.
inline std::vector<PerturbedSample> perturb(const TokenizedDocument& doc, std::size_t n_samples, std::uint64_t seed) {
    auto vocab = sorted_vocabulary(doc);
    const std::size_t m = vocab.size();
    if (m < 2) {
        throw Error(ErrorKind::Unprocessable,
                    "document '" + doc.doc_id + "' has fewer than 2 distinct terms; nothing to perturb");
    }
    if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be at least 1");

    std::map<std::string_view, std::size_t> feature_of;
    for (std::size_t i = 0; i < m; ++i) feature_of.emplace(vocab[i], i);
    std::vector<std::size_t> token_feature;
    token_feature.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens) token_feature.push_back(feature_of.at(t));

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> draw_z(1, m - 1);
    std::vector<std::size_t> order(m);

    std::vector<PerturbedSample> samples(n_samples);
    for (auto& sample : samples) {
        std::size_t z = draw_z(rng);
        std::iota(order.begin(), order.end(), std::size_t{0});
        // partial Fisher-Yates: the first z slots become the dropped terms
        for (std::size_t i = 0; i < z; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, m - 1);
            std::swap(order[i], order[pick(rng)]);
        }
        sample.presence.assign(m, 1);
        for (std::size_t i = 0; i < z; ++i) sample.presence[order[i]] = 0;
        sample.kept_tokens.reserve(doc.tokens.size());
        for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
            if (sample.presence[token_feature[t]] != 0) sample.kept_tokens.push_back(doc.tokens[t]);
        }
    }
    return samples;
}

/// The document with every term whose presence bit is 0 removed; equal to
/// make_tokenized(doc_id, kept_tokens) but built in one pass over the sorted
/// vocabulary instead of re-inserting every token.
inline TokenizedDocument restrict_document(const TokenizedDocument& doc, std::span<const std::uint8_t> presence) {
    const std::size_t n = doc.tokens.size();
    std::vector<std::uint8_t> keep_token(n, 0);
    std::size_t j = 0;
    for (const auto& [term, positions] : doc.term_positions) {
        if (presence[j++] != 0) {
            for (auto p : positions) keep_token[p] = 1;
        }
    }
    std::vector<std::size_t> new_position(n, 0);
    TokenizedDocument out;
    out.doc_id = doc.doc_id;
    for (std::size_t i = 0; i < n; ++i) {
        if (keep_token[i] != 0) {
            new_position[i] = out.tokens.size();
            out.tokens.push_back(doc.tokens[i]);
        }
    }
    j = 0;
    for (const auto& [term, positions] : doc.term_positions) {
        if (presence[j++] == 0) continue;
        out.vocabulary.emplace_hint(out.vocabulary.end(), term);
        std::vector<std::size_t> remapped;
        remapped.reserve(positions.size());
        for (auto p : positions) remapped.push_back(new_position[p]);
        out.term_positions.emplace_hint(out.term_positions.end(), term, std::move(remapped));
    }
    return out;
}

// ---- score to probability ----------------------------------------------------

/// 1 when the score beats the k-th document strictly, else 0.
inline double prob_topk_binary(RankerScore score, RankerScore threshold_score) {
    return score > threshold_score ? 1.0 : 0.0;
}

/// Grid the score-based probability is snapped to. Coarse enough that
/// rescaling all scores (which perturbs the ratio by a few ulp) cannot move a
/// label to a different grid point, fine enough to be invisible to the fit.
inline constexpr double score_label_resolution = 1.0 / 4294967296.0;  // 2^-32

/// 1 - (R(d_1) - R(d')) / R(d_1), saturating at 1 above the top score and
/// clamped at 0 below. Requires a positive top score.
inline double prob_score_based(RankerScore score, RankerScore top_score) {
    if (!(top_score.value() > 0.0)) {
        throw Error(ErrorKind::Unprocessable,
                    "converter 'score' requires a positive top score, got " + std::to_string(top_score.value()) +
                        "; shift the ranker scores so the top-ranked document scores above 0");
    }
    if (score >= top_score) return 1.0;
    double p = 1.0 - (top_score.value() - score.value()) / top_score.value();
    p = std::round(p / score_label_resolution) * score_label_resolution;
    return std::clamp(p, 0.0, 1.0);
}

inline bool sorted_descending(std::span<const RankerScore> scores) {
    return std::is_sorted(scores.begin(), scores.end(), std::greater<>{});
}

/// 0 at or below the k-th score; otherwise 1 - rank/k where the perturbed
/// document is inserted above any equal-scored entries.
inline double prob_rank_based(RankerScore score, std::span<const RankerScore> topk_scores, std::size_t k) {
    if (k < 1 || topk_scores.size() != k) {
        throw Error(ErrorKind::InvalidArgument, "converter 'rank' needs exactly k >= 1 reference scores");
    }
    if (!sorted_descending(topk_scores)) {
        throw Error(ErrorKind::InvalidArgument, "converter 'rank' needs reference scores sorted descending");
    }
    if (score <= topk_scores[k - 1]) return 0.0;
    auto above = static_cast<std::size_t>(
        std::count_if(topk_scores.begin(), topk_scores.end(), [&](RankerScore s) { return s > score; }));
    double rank = static_cast<double>(above + 1);
    return 1.0 - rank / static_cast<double>(k);
}

/// A converter bound to the anchors of one ranked list: d_1, d_k and the top-k scores.
class LabelConverter {
public:
    LabelConverter(ConverterKind kind, const RankedList& list) : kind_(kind) {
        if (list.empty()) throw Error(ErrorKind::InvalidArgument, "ranked list is empty");
        scores_ = list.scores();
        if (!sorted_descending(scores_)) {
            throw Error(ErrorKind::InvalidArgument, "ranked list scores are not sorted descending");
        }
        if (kind == ConverterKind::ScoreBased) prob_score_based(scores_.front(), scores_.front());
    }

    double operator()(RankerScore score) const {
        switch (kind_) {
            case ConverterKind::TopKBinary: return prob_topk_binary(score, scores_.back());
            case ConverterKind::ScoreBased: return prob_score_based(score, scores_.front());
            case ConverterKind::RankBased: return prob_rank_based(score, scores_, scores_.size());
        }
        return 0.0;
    }

private:
    ConverterKind kind_;
    std::vector<RankerScore> scores_;
};

// ---- locality ----------------------------------------------------------------

/// exp(-D^2 / width^2), D = cosine distance between the presence vector and
/// the all-ones vector = 1 - sqrt(kept / m).
inline double locality_weight(std::size_t original_vocab_size, std::span<const std::uint8_t> presence,
                              double kernel_width = 0.25) {
    auto kept = static_cast<double>(std::count(presence.begin(), presence.end(), std::uint8_t{1}));
    if (kept < 1.0) throw Error(ErrorKind::InvalidArgument, "presence vector keeps no term");
    double distance = 1.0 - std::sqrt(kept / static_cast<double>(original_vocab_size));
    return std::exp(-(distance * distance) / (kernel_width * kernel_width));
}

// ---- surrogate fit -----------------------------------------------------------

/// Weighted ridge regression of labels on term presence with an unpenalized
/// intercept, solved through the normal equations of the weighted-centred
/// design. `features[j]` names presence column j.
inline ExplanationModel fit_local_model(std::span<const PerturbedSample> samples, double regularization,
                                        std::span<const std::string> features) {
    if (samples.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 samples to fit");
    if (!(regularization > 0.0)) throw Error(ErrorKind::InvalidArgument, "regularization must be positive");
    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto m = static_cast<Eigen::Index>(features.size());
    for (const auto& s : samples) {
        if (s.presence.size() != features.size()) {
            throw Error(ErrorKind::InvalidArgument, "presence vector length does not match the feature count");
        }
    }

    const double first = samples.front().label;
    bool flat = std::all_of(samples.begin(), samples.end(), [&](const auto& s) { return s.label == first; });
    if (flat) {
        throw Error(ErrorKind::Degenerate,
                    "local region is flat: all " + std::to_string(samples.size()) + " perturbation labels equal " +
                        std::to_string(first) + (first >= 1.0 ? " (all relevant)" : first <= 0.0 ? " (all irrelevant)" : ""));
    }

    Eigen::MatrixXd x(n, m);
    Eigen::VectorXd y(n);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m; ++j) x(i, j) = s.presence[static_cast<std::size_t>(j)];
        y(i) = s.label;
        w(i) = s.weight;
    }
    const double w_sum = w.sum();
    if (!(w_sum > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample weights sum to zero");

    Eigen::RowVectorXd x_mean = (w.transpose() * x) / w_sum;
    double y_mean = w.dot(y) / w_sum;
    Eigen::MatrixXd xc = x.rowwise() - x_mean;
    Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd xw = xc.array().colwise() * w.array();
    Eigen::MatrixXd gram = xw.transpose() * xc;
    gram.diagonal().array() += regularization;
    Eigen::VectorXd rhs = xw.transpose() * yc;
    Eigen::VectorXd coef = gram.ldlt().solve(rhs);

    ExplanationModel model;
    model.intercept = y_mean - x_mean.dot(coef);
    Eigen::VectorXd residual = y - x * coef - Eigen::VectorXd::Constant(n, model.intercept);
    double rss = (w.array() * residual.array().square()).sum();
    double tss = (w.array() * yc.array().square()).sum();
    model.local_fit_r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    model.n_samples_used = samples.size();
    for (Eigen::Index j = 0; j < m; ++j) {
        if (!std::isfinite(coef(j))) throw Error(ErrorKind::Degenerate, "surrogate fit produced a non-finite coefficient");
        model.coefficients.emplace(features[static_cast<std::size_t>(j)], coef(j));
    }
    return model;
}

// ---- pipeline ----------------------------------------------------------------

/// Scores every sample with the ranker. Work is split across `workers`
/// threads; each result lands in its own slot so the outcome matches a
/// sequential run.
inline void score_samples(const Ranker& ranker, const Query& query, const TokenizedDocument& doc,
                          std::vector<PerturbedSample>& samples, unsigned workers) {
    auto score_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            samples[i].score = ranker.score(query, restrict_document(doc, samples[i].presence));
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(samples.size())));
    if (workers == 1) {
        score_range(0, samples.size());
        return;
    }
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        std::size_t chunk = (samples.size() + workers - 1) / workers;
        for (unsigned t = 0; t < workers; ++t) {
            std::size_t begin = std::min(samples.size(), t * chunk);
            std::size_t end = std::min(samples.size(), begin + chunk);
            pool.emplace_back([&, t, begin, end] {
                try {
                    score_range(begin, end);
                } catch (...) {
                    failures[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

/// Perturbs a document and fills in score, label and locality weight of every
/// sample. Labels are anchored on `ranked_list` (d_1, d_k and its scores).
inline std::vector<PerturbedSample> generate_samples(const Ranker& ranker, const Query& query,
                                                     const TokenizedDocument& doc, const RankedList& ranked_list,
                                                     const ExplanationParams& params) {
    params.validate_fit_settings();
    if (query.terms.empty()) throw Error(ErrorKind::InvalidArgument, "query has no terms");
    LabelConverter convert(params.converter, ranked_list);

    const auto m = doc.vocabulary.size();
    auto samples = perturb(doc, params.n_samples, params.seed);
    score_samples(ranker, query, doc, samples, params.workers);
    for (auto& s : samples) {
        s.label = convert(s.score);
        s.weight = locality_weight(m, s.presence, params.kernel_width);
    }
    return samples;
}

/// Full surrogate for one document: perturb, score, convert, weight, fit.
inline ExplanationModel explain_document_model(const Ranker& ranker, const Query& query, const TokenizedDocument& doc,
                                               const RankedList& ranked_list, const ExplanationParams& params) {
    auto samples = generate_samples(ranker, query, doc, ranked_list, params);
    return fit_local_model(samples, params.regularization, sorted_vocabulary(doc));
}

/// The `n_words` terms with the largest |weight|, ties broken by term.
inline std::vector<ExplanationEntry> top_entries(const std::map<std::string, double>& weights, std::size_t n_words) {
    std::vector<ExplanationEntry> entries;
    entries.reserve(weights.size());
    for (const auto& [term, weight] : weights) {
        entries.push_back({term, weight, weight > 0.0 ? ClassLabel::Relevant : ClassLabel::Irrelevant});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return std::abs(a.weight) > std::abs(b.weight); });
    if (entries.size() > n_words) entries.resize(n_words);
    return entries;
}

/// Why is this document relevant to the query?
inline Explanation explain_document(const Ranker& ranker, const Query& query, const TokenizedDocument& doc,
                                    const RankedList& ranked_list, const ExplanationParams& params) {
    params.validate(doc.vocabulary.size());
    auto model = explain_document_model(ranker, query, doc, ranked_list, params);
    Explanation out;
    out.doc_id = doc.doc_id;
    out.query = query.raw;
    out.entries = top_entries(model.coefficients, params.n_words);
    out.converter = params.converter;
    out.fit_r2 = model.local_fit_r2;
    out.seed = params.seed;
    return out;
}

/// Why is doc_a ranked above the document at rank `doc_b_rank`? The list is
/// cut at d_B so that d_B becomes the threshold document; only terms pushing
/// toward relevance are kept.
inline Explanation explain_pair(const Ranker& ranker, const Query& query, const TokenizedDocument& doc_a,
                                std::size_t doc_b_rank, const RankedList& ranked_list, const ExplanationParams& params) {
    if (doc_b_rank < 1 || doc_b_rank > ranked_list.depth()) {
        throw Error(ErrorKind::Conflict, "rank " + std::to_string(doc_b_rank) + " is outside the top-" +
                                             std::to_string(ranked_list.depth()) + " list");
    }
    auto rank_a = ranked_list.rank_of(doc_a.doc_id);
    if (rank_a == 0) throw Error(ErrorKind::Conflict, "document '" + doc_a.doc_id + "' is not in the ranked list");
    if (rank_a >= doc_b_rank) {
        throw Error(ErrorKind::Conflict, "document '" + doc_a.doc_id + "' (rank " + std::to_string(rank_a) +
                                             ") is not ranked above rank " + std::to_string(doc_b_rank));
    }
    auto out = explain_document(ranker, query, doc_a, ranked_list.truncated(doc_b_rank), params);
    std::erase_if(out.entries, [](const auto& e) { return !(e.weight > 0.0); });
    out.compared_to = ranked_list.entries[doc_b_rank - 1].doc_id;
    return out;
}

using DocumentLookup = std::function<TokenizedDocument(const std::string& doc_id)>;

/// Per-term sum of coefficient maps, accumulated in doc_id order so the
/// floating-point result does not depend on the order of `models`.
inline std::map<std::string, double> sum_coefficients(std::vector<std::pair<std::string, ExplanationModel>> models) {
    std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::map<std::string, double> total;
    for (const auto& [id, model] : models) {
        for (const auto& [term, c] : model.coefficients) total[term] += c;
    }
    return total;
}

/// What does the ranker take the query to mean? Sums the full coefficient
/// maps of every document in the list. Documents with a flat local region or
/// fewer than two distinct terms are skipped. The entries may be visited in
/// any order; converter anchors come from the sorted list.
inline IntentExplanation explain_intent(const Ranker& ranker, const Query& query, const RankedList& ranked_list,
                                        const DocumentLookup& lookup, const ExplanationParams& params) {
    params.validate_fit_settings();
    if (params.n_words < 1) throw Error(ErrorKind::InvalidArgument, "n_words must be at least 1");
    if (ranked_list.empty()) throw Error(ErrorKind::NotFound, "query retrieved no documents");

    auto anchors = rank_documents(ranked_list.query, ranked_list.entries, ranked_list.k);
    std::vector<std::pair<std::string, ExplanationModel>> models;
    std::string last_failure;
    for (const auto& entry : ranked_list.entries) {
        auto doc = lookup(entry.doc_id);
        if (doc.vocabulary.size() < 2) {
            last_failure = "document '" + doc.doc_id + "' has fewer than 2 distinct terms";
            continue;
        }
        try {
            models.emplace_back(entry.doc_id, explain_document_model(ranker, query, doc, anchors, params));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
            last_failure = e.what();
        }
    }
    if (models.empty()) {
        throw Error(ErrorKind::Degenerate, "no document in the top-" + std::to_string(anchors.depth()) +
                                               " list has a non-degenerate local region (" + last_failure + ")");
    }

    IntentExplanation out;
    out.query = query.raw;
    out.docs_aggregated = models.size();
    out.entries = top_entries(sum_coefficients(std::move(models)), params.n_words);
    out.converter = params.converter;
    out.seed = params.seed;
    return out;
}

}  // namespace exs
