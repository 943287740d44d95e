#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "exs/error.hpp"
#include "exs/ranked_list.hpp"

namespace exs {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
};

/// Token view of a document. `vocabulary` is the interpretable feature space
/// used by the explainer: one binary feature per unique term.
struct TokenizedDocument {
    std::string doc_id;
    std::vector<std::string> tokens;
    std::set<std::string> vocabulary;
    std::map<std::string, std::vector<std::size_t>> term_positions;

    std::size_t term_frequency(const std::string& term) const {
        auto it = term_positions.find(term);
        return it == term_positions.end() ? 0 : it->second.size();
    }
};

/// Lowercases ASCII letters and splits on every character that is not a
/// letter or digit. Bytes >= 0x80 count as word characters so UTF-8 words
/// stay intact. No stemming, no stopword removal.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

inline TokenizedDocument make_tokenized(std::string doc_id, std::vector<std::string> tokens) {
    TokenizedDocument doc;
    doc.doc_id = std::move(doc_id);
    doc.tokens = std::move(tokens);
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        doc.vocabulary.insert(doc.tokens[i]);
        doc.term_positions[doc.tokens[i]].push_back(i);
    }
    return doc;
}

/// Title followed by body; this is what gets indexed and scored.
inline TokenizedDocument tokenize_full(const Document& doc) {
    auto tokens = tokenize(doc.title);
    auto body = tokenize(doc.body);
    tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
    return make_tokenized(doc.doc_id, std::move(tokens));
}

/// Body only; this is the part the explainer perturbs.
inline TokenizedDocument tokenize_body(const Document& doc) {
    return make_tokenized(doc.doc_id, tokenize(doc.body));
}

struct Posting {
    std::string doc_id;
    std::size_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct Index {
    std::map<std::string, std::vector<Posting>> postings;
    std::map<std::string, std::size_t> doc_lengths;
    std::size_t doc_count = 0;
    double avg_doc_length = 0.0;

    std::size_t document_frequency(const std::string& term) const {
        auto it = postings.find(term);
        return it == postings.end() ? 0 : it->second.size();
    }

    friend bool operator==(const Index&, const Index&) = default;
};

namespace bm25 {

inline constexpr double k1 = 1.2;
inline constexpr double b = 0.75;

inline double idf(std::size_t doc_count, std::size_t df) {
    auto n = static_cast<double>(doc_count);
    auto d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

/// Contribution of one query term occurring `tf` times in a document of length `doc_length`.
inline double term_weight(std::size_t tf, std::size_t doc_length, double avg_doc_length, std::size_t doc_count,
                          std::size_t df) {
    if (tf == 0) return 0.0;
    auto f = static_cast<double>(tf);
    double norm = avg_doc_length > 0.0 ? static_cast<double>(doc_length) / avg_doc_length : 0.0;
    return idf(doc_count, df) * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * norm));
}

}  // namespace bm25

inline Index build_index(const std::vector<Document>& corpus) {
    Index index;
    std::map<std::string, std::map<std::string, std::size_t>> by_term;
    for (const auto& doc : corpus) {
        if (index.doc_lengths.contains(doc.doc_id)) {
            throw Error(ErrorKind::InvalidArgument, "duplicate doc_id '" + doc.doc_id + "'");
        }
        auto tokenized = tokenize_full(doc);
        index.doc_lengths[doc.doc_id] = tokenized.tokens.size();
        for (const auto& [term, positions] : tokenized.term_positions) {
            by_term[term][doc.doc_id] = positions.size();
        }
    }
    for (auto& [term, docs] : by_term) {
        auto& list = index.postings[term];
        list.reserve(docs.size());
        for (auto& [doc_id, tf] : docs) list.push_back(Posting{doc_id, tf});
    }
    index.doc_count = index.doc_lengths.size();
    if (index.doc_count > 0) {
        double total = 0.0;
        for (const auto& [id, len] : index.doc_lengths) total += static_cast<double>(len);
        index.avg_doc_length = total / static_cast<double>(index.doc_count);
    }
    return index;
}

/// BM25 candidate retrieval. Only documents matching at least one query term
/// are returned, best first, at most `pool_size` of them.
inline RankedList bm25_retrieve(const Index& index, const std::vector<std::string>& query_terms,
                                std::size_t pool_size) {
    if (pool_size < 1) throw Error(ErrorKind::InvalidArgument, "pool_size must be at least 1");
    std::string raw;
    for (const auto& t : query_terms) raw += (raw.empty() ? "" : " ") + t;
    Query query{raw, query_terms};
    if (query_terms.empty()) return RankedList{std::move(query), {}, pool_size};

    std::map<std::string, double> accum;
    for (const auto& term : query_terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        auto df = it->second.size();
        for (const auto& p : it->second) {
            accum[p.doc_id] += bm25::term_weight(p.tf, index.doc_lengths.at(p.doc_id), index.avg_doc_length,
                                                 index.doc_count, df);
        }
    }
    std::vector<RankedEntry> candidates;
    candidates.reserve(accum.size());
    for (const auto& [doc_id, score] : accum) candidates.push_back(RankedEntry{doc_id, RankerScore(score)});
    return rank_documents(std::move(query), std::move(candidates), pool_size);
}

/// Documents plus their index; lookups by doc_id.
class Corpus {
public:
    Corpus() = default;

    explicit Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
        for (std::size_t i = 0; i < documents_.size(); ++i) {
            const auto& d = documents_[i];
            if (d.doc_id.empty()) {
                throw Error(ErrorKind::InvalidArgument, "document " + std::to_string(i + 1) + " has an empty doc_id");
            }
            if (d.body.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
                throw Error(ErrorKind::InvalidArgument, "document '" + d.doc_id + "' has an empty body");
            }
        }
        index_ = build_index(documents_);
        for (std::size_t i = 0; i < documents_.size(); ++i) by_id_.emplace(documents_[i].doc_id, i);
    }

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const Index& index() const noexcept { return index_; }
    std::size_t size() const noexcept { return documents_.size(); }

    const Document* find(const std::string& doc_id) const {
        auto it = by_id_.find(doc_id);
        return it == by_id_.end() ? nullptr : &documents_[it->second];
    }

    const Document& at(const std::string& doc_id) const {
        const auto* doc = find(doc_id);
        if (doc == nullptr) throw Error(ErrorKind::NotFound, "unknown doc_id '" + doc_id + "'");
        return *doc;
    }

private:
    std::vector<Document> documents_;
    Index index_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// ---- file formats ----------------------------------------------------------

inline void to_json(nlohmann::json& j, const Document& d) {
    j = nlohmann::json{{"doc_id", d.doc_id}, {"title", d.title}, {"body", d.body}};
}

/// Newline-delimited JSON, one {"doc_id","title","body"} object per line.
/// Blank lines are skipped and unknown fields ignored.
inline std::vector<Document> parse_corpus(std::istream& in, const std::string& source = "<corpus>") {
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto where = source + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::Parse, where + ": invalid JSON (" + e.what() + ")");
        }
        Document d;
        for (auto [field, target] : {std::pair{"doc_id", &d.doc_id}, {"title", &d.title}, {"body", &d.body}}) {
            if (!j.is_object() || !j.contains(field) || !j[field].is_string()) {
                throw Error(ErrorKind::Parse, where + ": missing string field '" + field + "'");
            }
            *target = j[field].get<std::string>();
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

inline std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open corpus file '" + path.string() + "'");
    return parse_corpus(in, path.string());
}

inline constexpr unsigned char index_format_version = 1;

/// Canonical serialization: version byte, then a JSON document with sorted keys.
inline std::string serialize_corpus(const Corpus& corpus) {
    nlohmann::json postings = nlohmann::json::object();
    for (const auto& [term, list] : corpus.index().postings) {
        auto& arr = postings[term] = nlohmann::json::array();
        for (const auto& p : list) arr.push_back({p.doc_id, p.tf});
    }
    nlohmann::json j{
        {"documents", corpus.documents()},
        {"index",
         {{"doc_count", corpus.index().doc_count},
          {"avg_doc_length", corpus.index().avg_doc_length},
          {"doc_lengths", corpus.index().doc_lengths},
          {"postings", std::move(postings)}}},
    };
    std::string out(1, static_cast<char>(index_format_version));
    out += j.dump();
    return out;
}

inline Corpus deserialize_corpus(std::string_view bytes, const std::string& source = "<index>") {
    if (bytes.empty()) throw Error(ErrorKind::Parse, source + ": empty index file");
    auto version = static_cast<unsigned char>(bytes.front());
    if (version != index_format_version) {
        throw Error(ErrorKind::Parse, source + ": unsupported index format version " + std::to_string(version));
    }
    std::vector<Document> docs;
    try {
        auto j = nlohmann::json::parse(bytes.substr(1));
        for (const auto& d : j.at("documents")) {
            docs.push_back(Document{d.at("doc_id").get<std::string>(), d.at("title").get<std::string>(),
                                    d.at("body").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, source + ": malformed index (" + e.what() + ")");
    }
    Corpus corpus(std::move(docs));
    // Postings are rebuilt from the documents; the stored copy must agree byte for byte.
    if (serialize_corpus(corpus) != bytes) {
        throw Error(ErrorKind::Parse, source + ": stored index does not match its documents");
    }
    return corpus;
}

inline void save_index(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write index file '" + path.string() + "'");
    auto bytes = serialize_corpus(corpus);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "failed writing index file '" + path.string() + "'");
}

inline Corpus load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open index file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_corpus(buf.str(), path.string());
}

}  // namespace exs
