#pragma once

// Bridge to an external embedding process. The sidecar is invoked as
//
//   <command> <input> <output> --pooling {cls|mean|max} [--model <name>]
//
// where <input> is a corpus file whose vectors are ignored (id + text lines)
// and <output> must be written as a corpus file with one vector per input
// record, in input order.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"

namespace thistle {

struct SidecarConfig {
    std::string command;
    std::string pooling = "mean";
    std::string model; ///< empty: let the sidecar use its default model

    void validate() const {
        if (command.empty()) fail(ErrorCode::invalid_config, "sidecar mode needs --sidecar-cmd");
        if (pooling != "cls" && pooling != "mean" && pooling != "max") {
            fail(ErrorCode::invalid_config, "pooling must be one of cls, mean, max");
        }
    }
};

namespace detail {

inline std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

/// Removes its directory on scope exit.
class ScratchDir {
public:
    ScratchDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("thistle-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline void run_sidecar(const SidecarConfig& config, const std::filesystem::path& in,
                        const std::filesystem::path& out) {
    config.validate();
    std::string cmd = config.command + " " + shell_quote(in.string()) + " " +
                      shell_quote(out.string()) + " --pooling " + config.pooling;
    if (!config.model.empty()) cmd += " --model " + shell_quote(config.model);
    const int status = std::system(cmd.c_str());
    if (status != 0) {
        fail(ErrorCode::sidecar_error,
             "sidecar command failed (status " + std::to_string(status) + "): " + cmd);
    }
    if (!std::filesystem::exists(out)) {
        fail(ErrorCode::sidecar_error, "sidecar did not write '" + out.string() + "'");
    }
}

} // namespace detail

/// Embeds a text-only corpus file; returns records in file order. Texts are
/// cleaned before the sidecar sees them, the same way query texts are.
inline std::vector<DocRecord> embed_corpus(const SidecarConfig& config,
                                           const std::filesystem::path& corpus,
                                           std::size_t expected_dim) {
    config.validate();
    detail::ScratchDir scratch;
    const auto in = scratch.path() / "corpus.jsonl";
    std::vector<std::string> ids;
    {
        std::ofstream f(in);
        std::unordered_set<std::string> seen;
        detail::for_each_json_line(corpus, [&](const nlohmann::json& obj, std::size_t number) {
            const auto where = detail::line_prefix(corpus, number);
            std::string id = detail::string_field(obj, "id", true, where);
            if (id.empty()) fail(ErrorCode::empty_id, where + "empty id");
            if (!seen.insert(id).second) fail(ErrorCode::duplicate_id, where + "duplicate id '" + id + "'");
            const auto text = clean_text(detail::string_field(obj, "text", false, where));
            f << nlohmann::json{{"id", id}, {"text", text}}.dump() << '\n';
            ids.push_back(std::move(id));
        });
        if (!f) fail(ErrorCode::io_error, "cannot write '" + in.string() + "'");
    }
    const auto out = scratch.path() / "embedded.jsonl";
    detail::run_sidecar(config, in, out);
    auto records = ingest(out, expected_dim);
    if (records.size() != ids.size()) {
        fail(ErrorCode::sidecar_error, "sidecar returned " + std::to_string(records.size()) +
                                           " records for " + std::to_string(ids.size()));
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (records[i].id != ids[i]) {
            fail(ErrorCode::sidecar_error, "sidecar output line " + std::to_string(i + 1) +
                                               " has id '" + records[i].id + "', expected '" +
                                               ids[i] + "'");
        }
    }
    return records;
}

/// Embeds free-form texts, one vector per text, in order.
inline std::vector<Embedding> embed_texts(const SidecarConfig& config,
                                          std::span<const std::string> texts,
                                          std::size_t expected_dim) {
    if (texts.empty()) return {};
    detail::ScratchDir scratch;
    const auto in = scratch.path() / "texts.jsonl";
    {
        std::ofstream f(in);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            f << nlohmann::json{{"id", "t" + std::to_string(i)}, {"text", clean_text(texts[i])}}.dump()
              << '\n';
        }
        if (!f) fail(ErrorCode::io_error, "cannot write '" + in.string() + "'");
    }
    const auto out = scratch.path() / "embedded.jsonl";
    detail::run_sidecar(config, in, out);
    auto records = ingest(out, expected_dim);
    if (records.size() != texts.size()) {
        fail(ErrorCode::sidecar_error, "sidecar returned " + std::to_string(records.size()) +
                                           " vectors for " + std::to_string(texts.size()) + " texts");
    }
    std::vector<Embedding> out_vectors;
    out_vectors.reserve(records.size());
    for (auto& r : records) out_vectors.push_back(std::move(r.embedding));
    return out_vectors;
}

} // namespace thistle
