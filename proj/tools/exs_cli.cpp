// exs: command line driver for indexing, search and explanations.
//
// JSON goes to standard output, diagnostics to standard error.
// Exit codes: 0 success, 1 I/O failure, 2 contract or degenerate-region errors.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "exs/engine.hpp"
#include "exs/service.hpp"

namespace {

struct Common {
    std::string index_path;
    std::string embeddings_path;
    std::string q;
    std::string ranker = "bm25";
    std::string converter;
    std::size_t k = 10;
    std::size_t n_words = 10;
    std::size_t n_samples = 2000;
    std::size_t pool_size = 100;
    std::optional<std::uint64_t> seed;
};

void add_source_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--index", c.index_path, "Index file written by `exs index`")->required();
    cmd->add_option("--embeddings", c.embeddings_path, "GloVe-format embedding file (enables the 'embed' ranker)");
    cmd->add_option("--pool-size", c.pool_size, "BM25 candidate pool size")->check(CLI::PositiveNumber);
}

void add_query_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--q", c.q, "Query text")->required();
    cmd->add_option("--ranker", c.ranker, "Ranker identifier (bm25, embed)");
    cmd->add_option("--k", c.k, "Rank depth")->check(CLI::PositiveNumber);
}

void add_explain_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--converter", c.converter, "Score-to-probability converter (topk, score, rank)");
    cmd->add_option("--n-words", c.n_words, "Number of terms in the explanation")->check(CLI::PositiveNumber);
    cmd->add_option("--n-samples", c.n_samples, "Number of perturbed samples");
    cmd->add_option("--seed", c.seed, "Random seed (generated and echoed when absent)");
}

exs::Engine open_engine(const Common& c) {
    std::optional<exs::EmbeddingTable> table;
    if (!c.embeddings_path.empty()) table = exs::load_embeddings(c.embeddings_path);
    exs::EngineConfig config;
    config.pool_size = c.pool_size;
    config.default_k = c.k;
    return exs::Engine(exs::load_index(c.index_path), std::move(table), config);
}

std::optional<exs::ConverterKind> converter_of(const Common& c) {
    if (c.converter.empty()) return std::nullopt;
    return exs::parse_converter(c.converter);
}

/// Lenient n_words: over-large values shrink to the document vocabulary.
std::size_t clamp_n_words(const exs::Engine& engine, const std::string& doc_id, std::size_t n_words) {
    auto vocab = engine.body_vocabulary_size(doc_id);
    if (n_words > vocab) {
        std::cerr << "warning: --n-words " << n_words << " exceeds the vocabulary of '" << doc_id << "' (" << vocab
                  << " terms); using " << vocab << "\n";
        return vocab;
    }
    return n_words;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exs: explainable search over a document corpus"};
    app.require_subcommand(1, 1);

    std::string corpus_path;
    std::string out_path;
    auto* index_cmd = app.add_subcommand("index", "Build an index file from a JSONL corpus");
    index_cmd->add_option("--corpus", corpus_path, "Corpus file, one JSON document per line")->required();
    index_cmd->add_option("--out", out_path, "Index file to write")->required();

    Common common;
    auto* search_cmd = app.add_subcommand("search", "Rank documents for a query");
    add_source_flags(search_cmd, common);
    add_query_flags(search_cmd, common);

    std::string doc_id;
    auto* explain_cmd = app.add_subcommand("explain", "Explain why a document is relevant");
    add_source_flags(explain_cmd, common);
    add_query_flags(explain_cmd, common);
    add_explain_flags(explain_cmd, common);
    explain_cmd->add_option("--doc-id", doc_id, "Document to explain")->required();

    std::string doc_a_id;
    std::string doc_b_id;
    auto* pair_cmd = app.add_subcommand("explain-pair", "Explain why one document outranks another");
    add_source_flags(pair_cmd, common);
    add_query_flags(pair_cmd, common);
    add_explain_flags(pair_cmd, common);
    pair_cmd->add_option("--doc-a-id", doc_a_id, "Higher-ranked document")->required();
    pair_cmd->add_option("--doc-b-id", doc_b_id, "Lower-ranked document")->required();

    auto* intent_cmd = app.add_subcommand("intent", "Explain the query intent inferred by the ranker");
    add_source_flags(intent_cmd, common);
    add_query_flags(intent_cmd, common);
    add_explain_flags(intent_cmd, common);

    exs::ServiceConfig serve_config;
    std::string serve_corpus;
    std::string serve_embeddings;
    std::string serve_converter = "topk";
    auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
    serve_cmd->add_option("--corpus", serve_corpus, "Corpus JSONL or index file")->required();
    serve_cmd->add_option("--embeddings", serve_embeddings, "GloVe-format embedding file");
    serve_cmd->add_option("--host", serve_config.listen_host, "Listen address");
    serve_cmd->add_option("--port", serve_config.listen_port, "Listen port");
    serve_cmd->add_option("--default-k", serve_config.engine.default_k, "Default rank depth")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--converter", serve_converter, "Default converter (topk, score, rank)");
    serve_cmd->add_option("--n-samples", serve_config.engine.default_n_samples, "Default number of perturbed samples");
    serve_cmd->add_option("--pool-size", serve_config.engine.pool_size, "BM25 candidate pool size")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*index_cmd) {
            exs::Corpus corpus(exs::load_corpus(corpus_path));
            exs::save_index(corpus, out_path);
            std::cout << "indexed " << corpus.size() << " documents (avg_doc_length "
                      << corpus.index().avg_doc_length << ")\n";
            return 0;
        }
        if (*serve_cmd) {
            serve_config.corpus_path = serve_corpus;
            if (!serve_embeddings.empty()) serve_config.embedding_path = serve_embeddings;
            serve_config.engine.default_converter = exs::parse_converter(serve_converter);
            auto engine = exs::load_engine(serve_config);
            exs::Service service(engine);
            httplib::Server server;
            service.bind(server);
            std::cerr << "listening on " << serve_config.listen_host << ":" << serve_config.listen_port << " ("
                      << engine.corpus().size() << " documents)\n";
            if (!server.listen(serve_config.listen_host, serve_config.listen_port)) {
                std::cerr << "error: cannot listen on " << serve_config.listen_host << ":" << serve_config.listen_port
                          << "\n";
                return 1;
            }
            return 0;
        }

        auto engine = open_engine(common);
        exs::ojson out;
        if (*search_cmd) {
            out = engine.search({common.q, common.ranker, common.k});
        } else if (*explain_cmd) {
            exs::ExplainRequest req;
            req.q = common.q;
            req.doc_id = doc_id;
            req.ranker = common.ranker;
            req.converter = converter_of(common);
            req.k = common.k;
            req.n_words = clamp_n_words(engine, doc_id, common.n_words);
            req.n_samples = common.n_samples;
            req.seed = common.seed;
            out = engine.explain(req);
        } else if (*pair_cmd) {
            exs::PairRequest req;
            req.q = common.q;
            req.doc_a_id = doc_a_id;
            req.doc_b_id = doc_b_id;
            req.ranker = common.ranker;
            req.converter = converter_of(common);
            req.k = common.k;
            req.n_words = clamp_n_words(engine, doc_a_id, common.n_words);
            req.n_samples = common.n_samples;
            req.seed = common.seed;
            out = engine.explain_pair(req);
        } else if (*intent_cmd) {
            exs::IntentRequest req;
            req.q = common.q;
            req.ranker = common.ranker;
            req.converter = converter_of(common);
            req.k = common.k;
            req.n_words = common.n_words;
            req.n_samples = common.n_samples;
            req.seed = common.seed;
            out = engine.intent(req);
        }
        std::cout << exs::wire_body(out);
        return 0;
    } catch (const exs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exs::exit_code(e.kind());
    }
}
