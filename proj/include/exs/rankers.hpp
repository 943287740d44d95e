#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "exs/corpus.hpp"
#include "exs/error.hpp"
#include "exs/ranked_list.hpp"

namespace exs {

inline Query make_query(std::string raw) {
    auto terms = tokenize(raw);
    return Query{std::move(raw), std::move(terms)};
}

/// Pointwise ranker R(q, d). Implementations must be deterministic and safe
/// to call concurrently from several threads.
class Ranker {
public:
    virtual ~Ranker() = default;
    virtual RankerScore score(const Query& query, const TokenizedDocument& doc) const = 0;
};

/// Okapi BM25 against fixed collection statistics. The document's own length
/// and term frequencies come from the token sequence passed in, so perturbed
/// documents are scored as if they had been indexed that way.
class Bm25Ranker final : public Ranker {
public:
    explicit Bm25Ranker(const Index& index) : index_(&index) {}

    RankerScore score(const Query& query, const TokenizedDocument& doc) const override {
        double total = 0.0;
        for (const auto& term : query.terms) {
            auto tf = doc.term_frequency(term);
            if (tf == 0) continue;
            total += bm25::term_weight(tf, doc.tokens.size(), index_->avg_doc_length, index_->doc_count,
                                       index_->document_frequency(term));
        }
        return RankerScore(total);
    }

private:
    const Index* index_;
};

struct EmbeddingTable {
    std::size_t dimension = 0;
    std::unordered_map<std::string, std::vector<double>> vectors;

    const std::vector<double>* find(const std::string& term) const {
        auto it = vectors.find(term);
        return it == vectors.end() ? nullptr : &it->second;
    }
};

/// GloVe text format: "word v1 v2 ... vd" per line, single spaces. The
/// dimension is fixed by the first line.
inline EmbeddingTable parse_embeddings(std::istream& in, const std::string& source = "<embeddings>") {
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto where = source + ":" + std::to_string(line_no);

        std::vector<std::string_view> fields;
        std::string_view rest(line);
        while (!rest.empty()) {
            auto pos = rest.find(' ');
            auto field = rest.substr(0, pos);
            if (!field.empty()) fields.push_back(field);
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (fields.size() < 2) throw Error(ErrorKind::Parse, where + ": expected a word followed by components");

        std::vector<double> vec;
        vec.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
            if (ec != std::errc() || ptr != fields[i].data() + fields[i].size() || !std::isfinite(v)) {
                throw Error(ErrorKind::Parse,
                            where + ": component " + std::to_string(i) + " is not a number: '" + std::string(fields[i]) + "'");
            }
            vec.push_back(v);
        }
        if (table.dimension == 0) {
            table.dimension = vec.size();
        } else if (vec.size() != table.dimension) {
            throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(table.dimension) +
                                              " components, found " + std::to_string(vec.size()));
        }
        table.vectors.insert_or_assign(std::string(fields[0]), std::move(vec));
    }
    if (table.vectors.empty()) throw Error(ErrorKind::Parse, source + ": embedding file is empty");
    return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open embedding file '" + path.string() + "'");
    return parse_embeddings(in, path.string());
}

namespace detail {

/// Mean of the in-vocabulary vectors; false when no term is in the table.
inline bool centroid(const std::vector<std::string>& terms, const EmbeddingTable& table, std::vector<double>& out) {
    out.assign(table.dimension, 0.0);
    std::size_t hits = 0;
    for (const auto& t : terms) {
        const auto* v = table.find(t);
        if (v == nullptr) continue;
        for (std::size_t i = 0; i < table.dimension; ++i) out[i] += (*v)[i];
        ++hits;
    }
    if (hits == 0) return false;
    for (auto& x : out) x /= static_cast<double>(hits);
    return true;
}

}  // namespace detail

/// Cosine similarity of query and document embedding centroids. Terms missing
/// from the table are skipped; 0 when either side has nothing left.
inline RankerScore embedding_score(const Query& query, const TokenizedDocument& doc, const EmbeddingTable& table) {
    std::vector<double> q;
    std::vector<double> d;
    if (!detail::centroid(query.terms, table, q) || !detail::centroid(doc.tokens, table, d)) return RankerScore(0.0);
    double dot = 0.0;
    double qq = 0.0;
    double dd = 0.0;
    for (std::size_t i = 0; i < table.dimension; ++i) {
        dot += q[i] * d[i];
        qq += q[i] * q[i];
        dd += d[i] * d[i];
    }
    if (qq == 0.0 || dd == 0.0) return RankerScore(0.0);
    double cosine = dot / (std::sqrt(qq) * std::sqrt(dd));
    return RankerScore(std::clamp(cosine, -1.0, 1.0));
}

class EmbeddingRanker final : public Ranker {
public:
    explicit EmbeddingRanker(const EmbeddingTable& table) : table_(&table) {
        if (table.vectors.empty()) throw Error(ErrorKind::InvalidArgument, "embedding table is empty");
    }

    RankerScore score(const Query& query, const TokenizedDocument& doc) const override {
        return embedding_score(query, doc, *table_);
    }

private:
    const EmbeddingTable* table_;
};

/// Scores a body-only document with its title tokens put back in front, so
/// that perturbing the body leaves the title untouched and the unperturbed
/// body scores exactly like the indexed document.
class TitlePrefixedRanker final : public Ranker {
public:
    TitlePrefixedRanker(const Ranker& base, const Corpus& corpus) : base_(&base), corpus_(&corpus) {}

    RankerScore score(const Query& query, const TokenizedDocument& doc) const override {
        const auto* source = corpus_->find(doc.doc_id);
        if (source == nullptr) return base_->score(query, doc);
        auto tokens = tokenize(source->title);
        if (tokens.empty()) return base_->score(query, doc);
        tokens.insert(tokens.end(), doc.tokens.begin(), doc.tokens.end());
        return base_->score(query, make_tokenized(doc.doc_id, std::move(tokens)));
    }

private:
    const Ranker* base_;
    const Corpus* corpus_;
};

/// Rankers by identifier ("bm25", "embed").
class RankerRegistry {
public:
    void add(std::string id, std::shared_ptr<const Ranker> ranker) { rankers_.insert_or_assign(std::move(id), std::move(ranker)); }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (const auto& [id, r] : rankers_) out.push_back(id);
        return out;
    }

    std::string ids_joined() const {
        std::string out;
        for (const auto& id : ids()) out += (out.empty() ? "" : ", ") + id;
        return out;
    }

    const Ranker& get(const std::string& id) const {
        auto it = rankers_.find(id);
        if (it == rankers_.end()) {
            throw Error(ErrorKind::InvalidArgument, "unknown ranker '" + id + "'; available: " + ids_joined());
        }
        return *it->second;
    }

    RankerScore score(const std::string& id, const Query& query, const TokenizedDocument& doc) const {
        const auto& ranker = get(id);
        if (query.terms.empty()) throw Error(ErrorKind::InvalidArgument, "query has no terms");
        return ranker.score(query, doc);
    }

private:
    std::map<std::string, std::shared_ptr<const Ranker>> rankers_;
};

}  // namespace exs
