#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "exs/engine.hpp"

namespace exs::testing {

inline std::filesystem::path data_dir() { return EXS_DATA_DIR; }
inline std::filesystem::path sample_corpus_path() { return data_dir() / "sample_corpus.jsonl"; }
inline std::filesystem::path sample_embeddings_path() { return data_dir() / "sample_embeddings.txt"; }

inline Engine sample_engine(EngineConfig config = {}) {
    return Engine(Corpus(load_corpus(sample_corpus_path())), load_embeddings(sample_embeddings_path()), config);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("exs-tests-" + std::to_string(::getpid())) / name;
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs a shell command, capturing stdout, stderr and the exit status.
inline CommandResult run_command(const std::string& command) {
    static int counter = 0;
    auto err_path = scratch_dir("stderr") / ("err" + std::to_string(counter++) + ".txt");
    std::string full = command + " 2>" + err_path.string();
    CommandResult result;
    FILE* pipe = ::popen(full.c_str(), "r");
    if (pipe == nullptr) return result;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), n);
    int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = read_file(err_path);
    return result;
}

inline std::string cli() { return EXS_CLI_PATH; }

}  // namespace exs::testing
