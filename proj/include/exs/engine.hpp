#pragma once

// The shared core behind both transports: the HTTP service and the CLI turn
// their inputs into these requests and print the JSON produced here, so the
// two emit identical bodies for identical requests.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "exs/corpus.hpp"
#include "exs/explainer.hpp"
#include "exs/rankers.hpp"
#include "exs/serialize.hpp"

namespace exs {

struct EngineConfig {
    std::size_t default_k = 10;
    ConverterKind default_converter = ConverterKind::TopKBinary;
    std::size_t default_n_samples = 2000;
    std::size_t default_n_words = 10;
    std::size_t pool_size = 100;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

struct SearchRequest {
    std::string q;
    std::string ranker = "bm25";
    std::optional<std::size_t> k;
};

struct ExplainRequest {
    std::string q;
    std::string doc_id;
    std::string ranker = "bm25";
    std::optional<ConverterKind> converter;
    std::optional<std::size_t> k;
    std::optional<std::size_t> n_words;
    std::optional<std::size_t> n_samples;
    std::optional<std::uint64_t> seed;
};

struct PairRequest {
    std::string q;
    std::string doc_a_id;
    std::string doc_b_id;
    std::string ranker = "bm25";
    std::optional<ConverterKind> converter;
    std::optional<std::size_t> k;
    std::optional<std::size_t> n_words;
    std::optional<std::size_t> n_samples;
    std::optional<std::uint64_t> seed;
};

struct IntentRequest {
    std::string q;
    std::string ranker = "bm25";
    std::optional<ConverterKind> converter;
    std::optional<std::size_t> k;
    std::optional<std::size_t> n_words;
    std::optional<std::size_t> n_samples;
    std::optional<std::uint64_t> seed;
};

inline std::uint64_t fresh_seed() {
    std::random_device rd;
    return rd();
}

class Engine {
public:
    Engine(Corpus corpus, std::optional<EmbeddingTable> embeddings, EngineConfig config = {})
        : corpus_(std::make_unique<Corpus>(std::move(corpus))), config_(config) {
        if (config_.default_k < 1) throw Error(ErrorKind::InvalidArgument, "default_k must be at least 1");
        if (config_.pool_size < 1) throw Error(ErrorKind::InvalidArgument, "pool_size must be at least 1");
        rankers_.add("bm25", std::make_shared<Bm25Ranker>(corpus_->index()));
        if (embeddings) {
            embeddings_ = std::make_unique<EmbeddingTable>(std::move(*embeddings));
            rankers_.add("embed", std::make_shared<EmbeddingRanker>(*embeddings_));
        }
    }

    const Corpus& corpus() const noexcept { return *corpus_; }
    const RankerRegistry& rankers() const noexcept { return rankers_; }
    const EngineConfig& config() const noexcept { return config_; }

    /// BM25 candidate pool re-scored by the named ranker and cut to k.
    RankedList ranked_list(const std::string& q, const std::string& ranker_id, std::optional<std::size_t> k) const {
        const auto& ranker = rankers_.get(ranker_id);
        auto depth = k.value_or(config_.default_k);
        if (depth < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
        auto query = make_query(q);
        if (query.terms.empty()) throw Error(ErrorKind::InvalidArgument, "query is empty after tokenization");
        auto pool = bm25_retrieve(corpus_->index(), query.terms, config_.pool_size);
        std::vector<RankedEntry> candidates;
        candidates.reserve(pool.entries.size());
        for (const auto& e : pool.entries) {
            candidates.push_back({e.doc_id, ranker.score(query, tokenize_full(corpus_->at(e.doc_id)))});
        }
        return rank_documents(std::move(query), std::move(candidates), depth);
    }

    ojson search(const SearchRequest& req) const {
        auto list = ranked_list(req.q, req.ranker, req.k);
        ojson results = ojson::array();
        for (std::size_t i = 0; i < list.entries.size(); ++i) {
            const auto& doc = corpus_->at(list.entries[i].doc_id);
            results.push_back({{"rank", i + 1},
                               {"doc_id", doc.doc_id},
                               {"title", doc.title},
                               {"score", list.entries[i].score.value()},
                               {"snippet", snippet(doc.body)}});
        }
        ojson j;
        j["query"] = req.q;
        j["ranker"] = req.ranker;
        j["k"] = list.k;
        j["results"] = std::move(results);
        return j;
    }

    /// Vocabulary size of the perturbable part (body) of a document.
    std::size_t body_vocabulary_size(const std::string& doc_id) const {
        return tokenize_body(corpus_->at(doc_id)).vocabulary.size();
    }

    ojson explain(const ExplainRequest& req) const {
        auto list = ranked_list(req.q, req.ranker, req.k);
        const auto& doc = corpus_->at(req.doc_id);
        if (list.rank_of(doc.doc_id) == 0) {
            throw Error(ErrorKind::Conflict, "document '" + doc.doc_id + "' is not in the top-" +
                                                 std::to_string(list.k) + " results for this query and ranker");
        }
        auto body = tokenize_body(doc);
        auto params = make_params(req.converter, req.n_words, req.n_samples, req.seed, body.vocabulary.size());
        TitlePrefixedRanker ranker(rankers_.get(req.ranker), *corpus_);
        return to_json(explain_document(ranker, list.query, body, list, params));
    }

    ojson explain_pair(const PairRequest& req) const {
        auto list = ranked_list(req.q, req.ranker, req.k);
        const auto& doc_a = corpus_->at(req.doc_a_id);
        const auto& doc_b = corpus_->at(req.doc_b_id);
        auto rank_a = list.rank_of(doc_a.doc_id);
        auto rank_b = list.rank_of(doc_b.doc_id);
        if (rank_a == 0 || rank_b == 0) {
            throw Error(ErrorKind::Conflict, "both documents must be in the top-" + std::to_string(list.k) + " results");
        }
        auto body = tokenize_body(doc_a);
        auto params = make_params(req.converter, req.n_words, req.n_samples, req.seed, body.vocabulary.size());
        TitlePrefixedRanker ranker(rankers_.get(req.ranker), *corpus_);
        return to_json(exs::explain_pair(ranker, list.query, body, rank_b, list, params));
    }

    ojson intent(const IntentRequest& req) const {
        auto list = ranked_list(req.q, req.ranker, req.k);
        if (list.empty()) throw Error(ErrorKind::NotFound, "query '" + req.q + "' retrieved no documents");
        auto params = make_params(req.converter, req.n_words, req.n_samples, req.seed);
        TitlePrefixedRanker ranker(rankers_.get(req.ranker), *corpus_);
        auto lookup = [this](const std::string& id) { return tokenize_body(corpus_->at(id)); };
        return to_json(explain_intent(ranker, list.query, list, lookup, params));
    }

    ojson meta() const {
        ojson converters = ojson::array({"topk", "score", "rank"});
        return {{"rankers", rankers_.ids()},
                {"converters", converters},
                {"corpus", {{"doc_count", corpus_->size()}}},
                {"defaults",
                 {{"k", config_.default_k},
                  {"converter", to_wire(config_.default_converter)},
                  {"n_samples", config_.default_n_samples},
                  {"n_words", config_.default_n_words},
                  {"pool_size", config_.pool_size}}}};
    }

    /// First 200 characters of the body, never splitting a UTF-8 sequence.
    static std::string snippet(const std::string& body, std::size_t max_chars = 200) {
        std::size_t chars = 0;
        std::size_t i = 0;
        while (i < body.size() && chars < max_chars) {
            auto c = static_cast<unsigned char>(body[i]);
            std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
            i = std::min(body.size(), i + len);
            ++chars;
        }
        return body.substr(0, i);
    }

private:
    ExplanationParams make_params(std::optional<ConverterKind> converter, std::optional<std::size_t> n_words,
                                  std::optional<std::size_t> n_samples, std::optional<std::uint64_t> seed,
                                  std::size_t vocabulary_size = 0) const {
        ExplanationParams p;
        p.converter = converter.value_or(config_.default_converter);
        // an explicit n_words is validated downstream; the default shrinks to fit
        p.n_words = n_words.value_or(vocabulary_size > 0 ? std::min(config_.default_n_words, vocabulary_size)
                                                         : config_.default_n_words);
        p.n_samples = n_samples.value_or(config_.default_n_samples);
        p.seed = seed.value_or(fresh_seed());
        p.workers = config_.workers;
        return p;
    }

    std::unique_ptr<Corpus> corpus_;
    std::unique_ptr<EmbeddingTable> embeddings_;
    EngineConfig config_;
    RankerRegistry rankers_;
};

}  // namespace exs
