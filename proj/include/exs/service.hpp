#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that breaks Eigen's kernels.
#include "exs/engine.hpp"
#include "exs/serialize.hpp"

#include <httplib.h>
#include <json.hpp>

namespace exs {

struct ServiceConfig {
    std::filesystem::path corpus_path;
    std::optional<std::filesystem::path> embedding_path;
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    EngineConfig engine;
};

/// Loads the corpus (JSONL, or an index file written by `exs index`) and the
/// optional embeddings named in the config.
inline Engine load_engine(const ServiceConfig& config) {
    if (!std::filesystem::exists(config.corpus_path)) {
        throw Error(ErrorKind::Io, "corpus file '" + config.corpus_path.string() + "' does not exist");
    }
    std::ifstream probe(config.corpus_path, std::ios::binary);
    bool is_index = probe.peek() == index_format_version;
    probe.close();
    Corpus corpus = is_index ? load_index(config.corpus_path) : Corpus(load_corpus(config.corpus_path));
    std::optional<EmbeddingTable> table;
    if (config.embedding_path) table = load_embeddings(*config.embedding_path);
    return Engine(std::move(corpus), std::move(table), config.engine);
}

struct HttpResponse {
    int status = 200;
    std::string body;
};

namespace detail {

inline std::string field_error(const std::string& key, const std::string& what) {
    return "field '" + key + "' " + what;
}

inline std::string require_string(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw Error(ErrorKind::InvalidArgument, field_error(key, "is required and must be a string"));
    }
    return j[key].get<std::string>();
}

inline std::string optional_string(const nlohmann::json& j, const std::string& key, std::string fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    if (!j[key].is_string()) throw Error(ErrorKind::InvalidArgument, field_error(key, "must be a string"));
    return j[key].get<std::string>();
}

inline std::optional<std::uint64_t> optional_unsigned(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    const auto& v = j[key];
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        throw Error(ErrorKind::InvalidArgument, field_error(key, "must be non-negative"));
    }
    throw Error(ErrorKind::InvalidArgument, field_error(key, "must be an integer"));
}

inline std::optional<std::size_t> optional_count(const nlohmann::json& j, const std::string& key) {
    auto v = optional_unsigned(j, key);
    if (!v) return std::nullopt;
    if (*v < 1) throw Error(ErrorKind::InvalidArgument, field_error(key, "must be at least 1"));
    return static_cast<std::size_t>(*v);
}

inline std::optional<ConverterKind> optional_converter(const nlohmann::json& j) {
    if (!j.contains("converter") || j["converter"].is_null()) return std::nullopt;
    return parse_converter(require_string(j, "converter"));
}

inline nlohmann::json parse_body(const std::string& body) {
    try {
        auto j = nlohmann::json::parse(body);
        if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "request body must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
    }
}

inline std::optional<std::size_t> parse_k_param(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::InvalidArgument, "k must be an integer");
    }
    if (v < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline ExplainRequest parse_explain_request(const nlohmann::json& j) {
    ExplainRequest r;
    r.q = detail::require_string(j, "q");
    r.doc_id = detail::require_string(j, "doc_id");
    r.ranker = detail::optional_string(j, "ranker", r.ranker);
    r.converter = detail::optional_converter(j);
    r.k = detail::optional_count(j, "k");
    r.n_words = detail::optional_count(j, "n_words");
    r.n_samples = detail::optional_count(j, "n_samples");
    r.seed = detail::optional_unsigned(j, "seed");
    return r;
}

inline PairRequest parse_pair_request(const nlohmann::json& j) {
    PairRequest r;
    r.q = detail::require_string(j, "q");
    r.doc_a_id = detail::require_string(j, "doc_a_id");
    r.doc_b_id = detail::require_string(j, "doc_b_id");
    r.ranker = detail::optional_string(j, "ranker", r.ranker);
    r.converter = detail::optional_converter(j);
    r.k = detail::optional_count(j, "k");
    r.n_words = detail::optional_count(j, "n_words");
    r.n_samples = detail::optional_count(j, "n_samples");
    r.seed = detail::optional_unsigned(j, "seed");
    return r;
}

inline IntentRequest parse_intent_request(const nlohmann::json& j) {
    IntentRequest r;
    r.q = detail::require_string(j, "q");
    r.ranker = detail::optional_string(j, "ranker", r.ranker);
    r.converter = detail::optional_converter(j);
    r.k = detail::optional_count(j, "k");
    r.n_words = detail::optional_count(j, "n_words");
    r.n_samples = detail::optional_count(j, "n_samples");
    r.seed = detail::optional_unsigned(j, "seed");
    return r;
}

/// JSON body as emitted by every transport: compact, newline terminated.
inline std::string wire_body(const ojson& j) { return j.dump() + "\n"; }

/// Transport-independent request handlers; `bind` wires them to an HTTP server.
class Service {
public:
    explicit Service(const Engine& engine) : engine_(&engine) {}

    HttpResponse meta() const {
        return guarded([&] { return engine_->meta(); });
    }

    HttpResponse search(const std::string& q, const std::string& ranker, const std::string& k) const {
        return guarded([&] {
            return engine_->search(SearchRequest{q, ranker.empty() ? "bm25" : ranker, detail::parse_k_param(k)});
        });
    }

    HttpResponse explain(const std::string& body) const {
        return guarded([&] { return engine_->explain(parse_explain_request(detail::parse_body(body))); });
    }

    HttpResponse explain_pair(const std::string& body) const {
        return guarded([&] { return engine_->explain_pair(parse_pair_request(detail::parse_body(body))); });
    }

    HttpResponse intent(const std::string& body) const {
        return guarded([&] { return engine_->intent(parse_intent_request(detail::parse_body(body))); });
    }

    void bind(httplib::Server& server) const {
        auto reply = [](httplib::Response& res, const HttpResponse& r) {
            res.status = r.status;
            res.set_content(r.body, "application/json; charset=utf-8");
        };
        server.Get("/meta", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, meta()); });
        server.Get("/search", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, search(req.get_param_value("q"), req.get_param_value("ranker"), req.get_param_value("k")));
        });
        server.Post("/explain", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, explain(req.body));
        });
        server.Post("/explain_pair", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, explain_pair(req.body));
        });
        server.Post("/intent", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, intent(req.body));
        });
    }

private:
    template <typename F>
    HttpResponse guarded(F&& f) const {
        try {
            return {200, wire_body(f())};
        } catch (const Error& e) {
            return {http_status(e.kind()), wire_body(error_json(e.kind(), e.what()))};
        } catch (const std::exception& e) {
            return {500, wire_body(error_json(ErrorKind::Io, e.what()))};
        }
    }

    const Engine* engine_;
};

}  // namespace exs
