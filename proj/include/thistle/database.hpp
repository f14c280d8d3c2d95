#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flat_index.hpp"
#include "hnsw_index.hpp"
#include "index.hpp"
#include "lsh_index.hpp"

namespace thistle {

struct InsertReport {
    std::size_t inserted = 0;
    std::chrono::nanoseconds elapsed{0};

    double seconds() const noexcept { return std::chrono::duration<double>(elapsed).count(); }
};

/// Fresh, empty backend for a validated config.
inline std::unique_ptr<VectorIndex> make_index(const IndexConfig& config) {
    config.validate();
    switch (config.backend) {
    case Backend::iter_cosine:
    case Backend::iter_euclidean:
        return std::make_unique<FlatIndex>(config.dim, config.metric());
    case Backend::hnsw_cosine:
    case Backend::hnsw_euclidean:
        return std::make_unique<HnswIndex>(config.dim, config.metric(), config.hnsw);
    case Backend::lsh:
        return std::make_unique<LshIndex>(config.dim, config.lsh);
    }
    fail(ErrorCode::invalid_config, "unknown backend");
}

/// A single-index vector database: records plus the backend chosen at runtime.
///
/// One writer at a time; once loading is done, `query` may be called from
/// any number of threads.
class Database {
public:
    explicit Database(IndexConfig config) : config_(std::move(config)), index_(make_index(config_)) {}

    /// Restores a database from already-built parts (snapshot loading).
    Database(IndexConfig config, std::unique_ptr<VectorIndex> index, std::vector<std::string> texts)
        : config_(std::move(config)), index_(std::move(index)), texts_(std::move(texts)) {
        if (texts_.size() != index_->size()) {
            fail(ErrorCode::invalid_argument, "text count does not match index size");
        }
    }

    const IndexConfig& config() const noexcept { return config_; }
    const VectorIndex& index() const noexcept { return *index_; }
    VectorIndex& index() noexcept { return *index_; }
    std::size_t size() const noexcept { return index_->size(); }
    std::size_t dim() const noexcept { return config_.dim; }

    /// Inserts a batch and times it. The batch is all-or-nothing.
    InsertReport load(std::span<const DocRecord> records) {
        const auto start = std::chrono::steady_clock::now();
        if (config_.normalize_on_insert) {
            std::vector<DocRecord> unit;
            unit.reserve(records.size());
            for (std::size_t i = 0; i < records.size(); ++i) {
                const auto& r = records[i];
                check_record_dim(r, i);
                if (is_zero(r.embedding.values())) {
                    fail(ErrorCode::zero_vector, "record " + std::to_string(i) + " ('" + r.id +
                                                     "') is a zero vector and cannot be normalized");
                }
                unit.push_back({r.id, r.text, normalized(r.embedding)});
            }
            index_->add(unit);
        } else {
            index_->add(records);
        }
        for (const auto& r : records) texts_.push_back(r.text);
        const auto elapsed = std::chrono::steady_clock::now() - start;
        return {records.size(), std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed)};
    }

    QueryResult query(const Embedding& q, std::size_t k, QueryStats* stats = nullptr) const {
        if (config_.normalize_on_insert && q.dim() == config_.dim && !is_zero(q.values())) {
            const Embedding unit = normalized(q);
            return index_->query(unit.values(), k, stats);
        }
        return index_->query(q.values(), k, stats);
    }

    const std::string& text(std::size_t row) const noexcept { return texts_[row]; }

    std::optional<std::string> text_of(std::string_view id) const {
        if (auto row = index_->store().find(id)) return texts_[*row];
        return std::nullopt;
    }

    /// Stored records in insertion order (embeddings as stored, i.e. after normalization).
    std::vector<DocRecord> records() const {
        const auto& store = index_->store();
        std::vector<DocRecord> out;
        out.reserve(store.size());
        for (std::size_t row = 0; row < store.size(); ++row) {
            const auto v = store.vector(row);
            out.push_back({store.id(row), texts_[row], Embedding(std::vector<float>(v.begin(), v.end()))});
        }
        return out;
    }

private:
    void check_record_dim(const DocRecord& r, std::size_t i) const {
        if (r.embedding.dim() != config_.dim) {
            fail(ErrorCode::dimension_mismatch,
                 "record " + std::to_string(i) + " ('" + r.id + "') has dim " +
                     std::to_string(r.embedding.dim()) + ", expected " + std::to_string(config_.dim));
        }
    }

    IndexConfig config_;
    std::unique_ptr<VectorIndex> index_;
    std::vector<std::string> texts_;
};

} // namespace thistle
