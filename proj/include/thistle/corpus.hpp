#pragma once

// Corpus files are JSON Lines. Each non-blank line is one object:
//
//   {"id": "doc-1", "text": "passage text", "vector": [0.1, -0.2, ...]}
//
// "text" is optional. "vector" is required when ingesting for indexing;
// files destined for an embedding sidecar omit it.
//
// Evaluation pair files use the same framing:
//
//   {"query_id": "q-1", "vector": [...], "text": "query text", "expected_id": "doc-1"}
//
// where at least one of "vector" / "text" is present.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "index.hpp"

namespace thistle {

/// Removes ASCII characters other than letters, digits and whitespace, then
/// collapses whitespace runs to one space and trims both ends. Bytes outside
/// ASCII (UTF-8 sequences) are kept.
inline std::string clean_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isspace(c)) {
            pending_space = true;
            continue;
        }
        if (c < 0x80 && !std::isalnum(c)) continue;
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

/// One query of an evaluation run with its single expected answer.
struct EvalPair {
    std::string query_id;
    std::optional<Embedding> query_embedding;
    std::string query_text;
    std::string expected_id;
};

namespace detail {

inline std::string line_prefix(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

inline Embedding parse_vector(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) {
        fail(ErrorCode::parse_error, where + "\"vector\" must be a non-empty array of numbers");
    }
    std::vector<float> values;
    values.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) fail(ErrorCode::parse_error, where + "\"vector\" holds a non-number");
        values.push_back(x.get<float>());
    }
    try {
        return Embedding(std::move(values));
    } catch (const Error& e) {
        fail(ErrorCode::parse_error, where + e.what());
    }
}

inline std::string string_field(const nlohmann::json& obj, const char* key, bool required,
                                const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) fail(ErrorCode::parse_error, where + "missing \"" + key + "\"");
        return {};
    }
    if (!it->is_string()) fail(ErrorCode::parse_error, where + "\"" + key + "\" must be a string");
    return it->get<std::string>();
}

/// Calls `fn(object, line_number)` for each non-blank line.
template <class Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse_error, line_prefix(path, number) + "malformed JSON: " + e.what());
        }
        if (!obj.is_object()) {
            fail(ErrorCode::parse_error, line_prefix(path, number) + "expected a JSON object");
        }
        fn(obj, number);
    }
}

} // namespace detail

/// Reads a corpus file into records in file order, cleaning each text.
/// Every record must carry a vector of `expected_dim` coordinates.
inline std::vector<DocRecord> ingest(const std::filesystem::path& path, std::size_t expected_dim) {
    std::vector<DocRecord> records;
    std::unordered_set<std::string> ids;
    detail::for_each_json_line(path, [&](const nlohmann::json& obj, std::size_t number) {
        const auto where = detail::line_prefix(path, number);
        std::string id = detail::string_field(obj, "id", true, where);
        if (id.empty()) fail(ErrorCode::empty_id, where + "empty id");
        if (!obj.contains("vector")) {
            fail(ErrorCode::parse_error,
                 where + "missing \"vector\" (use the sidecar embedder for text-only corpora)");
        }
        Embedding embedding = detail::parse_vector(obj.at("vector"), where);
        if (embedding.dim() != expected_dim) {
            fail(ErrorCode::dimension_mismatch, where + "vector has dim " +
                                                    std::to_string(embedding.dim()) +
                                                    ", expected " + std::to_string(expected_dim));
        }
        if (!ids.insert(id).second) fail(ErrorCode::duplicate_id, where + "duplicate id '" + id + "'");
        std::string text = clean_text(detail::string_field(obj, "text", false, where));
        records.push_back({std::move(id), std::move(text), std::move(embedding)});
    });
    return records;
}

/// Reads an evaluation pair file. Vectors, when present, must have `expected_dim` entries.
inline std::vector<EvalPair> ingest_pairs(const std::filesystem::path& path,
                                          std::size_t expected_dim) {
    std::vector<EvalPair> pairs;
    detail::for_each_json_line(path, [&](const nlohmann::json& obj, std::size_t number) {
        const auto where = detail::line_prefix(path, number);
        EvalPair p;
        p.query_id = detail::string_field(obj, "query_id", false, where);
        if (p.query_id.empty()) p.query_id = "q" + std::to_string(pairs.size());
        p.expected_id = detail::string_field(obj, "expected_id", true, where);
        p.query_text = clean_text(detail::string_field(obj, "text", false, where));
        if (obj.contains("vector")) {
            p.query_embedding = detail::parse_vector(obj.at("vector"), where);
            if (p.query_embedding->dim() != expected_dim) {
                fail(ErrorCode::dimension_mismatch,
                     where + "vector has dim " + std::to_string(p.query_embedding->dim()) +
                         ", expected " + std::to_string(expected_dim));
            }
        } else if (!obj.contains("text")) {
            fail(ErrorCode::parse_error, where + "pair needs a \"vector\" or a \"text\"");
        }
        pairs.push_back(std::move(p));
    });
    return pairs;
}

namespace detail {

inline nlohmann::json vector_json(std::span<const float> v) {
    auto arr = nlohmann::json::array();
    for (float x : v) arr.push_back(x);
    return arr;
}

} // namespace detail

inline void write_corpus(const std::filesystem::path& path, std::span<const DocRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    for (const auto& r : records) {
        nlohmann::json obj = {{"id", r.id}, {"text", r.text}};
        obj["vector"] = detail::vector_json(r.embedding.values());
        out << obj.dump() << '\n';
    }
    if (!out) fail(ErrorCode::io_error, "write to '" + path.string() + "' failed");
}

inline void write_pairs(const std::filesystem::path& path, std::span<const EvalPair> pairs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    for (const auto& p : pairs) {
        nlohmann::json obj = {{"query_id", p.query_id}, {"expected_id", p.expected_id}};
        if (!p.query_text.empty()) obj["text"] = p.query_text;
        if (p.query_embedding) obj["vector"] = detail::vector_json(p.query_embedding->values());
        out << obj.dump() << '\n';
    }
    if (!out) fail(ErrorCode::io_error, "write to '" + path.string() + "' failed");
}

} // namespace thistle
