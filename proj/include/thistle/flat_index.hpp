#pragma once

#include <span>

#include "index.hpp"

namespace thistle {

/// Exact kNN by full scan. Every stored row is scored for every query; the
/// top k are kept in a bounded heap ordered by (distance, id).
class FlatIndex final : public VectorIndex {
public:
    FlatIndex(std::size_t dim, Metric metric) : store_(dim), metric_(metric) {}

    Backend backend() const noexcept override {
        return metric_ == Metric::cosine ? Backend::iter_cosine : Backend::iter_euclidean;
    }
    const VectorStore& store() const noexcept override { return store_; }

    void add(std::span<const DocRecord> records) override {
        store_.validate_batch(records, metric_);
        store_.reserve(store_.size() + records.size());
        for (const auto& r : records) store_.append(r.id, r.embedding.values());
    }

    QueryResult query(std::span<const float> q, std::size_t k,
                      QueryStats* stats = nullptr) const override {
        check_query(q, k);
        RowDistance dist(store_, metric_, q);
        TopK top(store_, k);
        for (std::size_t row = 0; row < store_.size(); ++row) top.push(dist(row), row);
        if (stats) {
            stats->distance_evals = dist.evals();
            stats->candidates = store_.size();
        }
        return std::move(top).finish();
    }

private:
    VectorStore store_;
    Metric metric_;
};

} // namespace thistle
