#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "binary_io.hpp"
#include "index.hpp"

namespace thistle {

namespace lsh {

using Signature = std::uint64_t;

/// `count` hyperplane normals of width `dim`, drawn isotropic Gaussian and
/// scaled to unit length, row-major.
inline std::vector<float> random_hyperplanes(std::mt19937_64& rng, std::size_t count,
                                             std::size_t dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<float> planes(count * dim);
    std::vector<double> row(dim);
    for (std::size_t p = 0; p < count; ++p) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (double& x : row) {
                x = gauss(rng);
                norm2 += x * x;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t i = 0; i < dim; ++i) planes[p * dim + i] = static_cast<float>(row[i] * inv);
    }
    return planes;
}

/// Bit i is set iff v lies on the non-negative side of hyperplane i.
inline Signature signature(std::span<const float> planes, std::span<const float> v) noexcept {
    const std::size_t dim = v.size();
    const std::size_t count = planes.size() / dim;
    Signature sig = 0;
    for (std::size_t p = 0; p < count; ++p) {
        if (detail::dot(planes.subspan(p * dim, dim), v) >= 0.0) sig |= Signature{1} << p;
    }
    return sig;
}

/// One hash table: its hyperplanes and signature -> rows buckets.
struct Table {
    std::vector<float> planes;
    std::unordered_map<Signature, std::vector<std::uint32_t>> buckets;
};

} // namespace lsh

/// Random-hyperplane LSH over several independent tables.
///
/// A query's candidates are the union of its own bucket in every table;
/// candidates are re-ranked by exact cosine distance. An empty union yields
/// an empty result (a miss). Table t's hyperplanes depend only on the seed
/// and t, so growing n_tables only adds tables.
class LshIndex final : public VectorIndex {
public:
    LshIndex(std::size_t dim, LshParams params = {}) : store_(dim), params_(params) {
        params_.validate();
        std::mt19937_64 rng(params_.seed);
        tables_.resize(params_.n_tables);
        for (auto& t : tables_) t.planes = lsh::random_hyperplanes(rng, params_.n_projections, dim);
    }

    Backend backend() const noexcept override { return Backend::lsh; }
    const VectorStore& store() const noexcept override { return store_; }
    const LshParams& params() const noexcept { return params_; }
    const std::vector<lsh::Table>& tables() const noexcept { return tables_; }

    lsh::Signature signature(std::size_t table, std::span<const float> v) const {
        if (table >= tables_.size()) fail(ErrorCode::invalid_argument, "lsh: table out of range");
        check_same_dim(v.size(), store_.dim());
        return lsh::signature(tables_[table].planes, v);
    }

    void add(std::span<const DocRecord> records) override {
        store_.validate_batch(records, Metric::cosine);
        store_.reserve(store_.size() + records.size());
        for (const auto& r : records) {
            const auto row = static_cast<std::uint32_t>(store_.append(r.id, r.embedding.values()));
            for (auto& t : tables_) {
                t.buckets[lsh::signature(t.planes, r.embedding.values())].push_back(row);
            }
        }
    }

    /// Rows sharing q's bucket in at least one of the first `n_tables` tables, ascending.
    std::vector<std::uint32_t> candidates(std::span<const float> q, std::size_t n_tables) const {
        check_same_dim(q.size(), store_.dim());
        std::vector<std::uint32_t> out;
        for (std::size_t t = 0; t < std::min(n_tables, tables_.size()); ++t) {
            const auto it = tables_[t].buckets.find(lsh::signature(tables_[t].planes, q));
            if (it != tables_[t].buckets.end()) {
                out.insert(out.end(), it->second.begin(), it->second.end());
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    QueryResult query(std::span<const float> q, std::size_t k,
                      QueryStats* stats = nullptr) const override {
        check_query(q, k);
        const auto rows = candidates(q, tables_.size());
        RowDistance dist(store_, Metric::cosine, q);
        TopK top(store_, k);
        for (auto row : rows) top.push(dist(row), row);
        if (stats) {
            stats->distance_evals = dist.evals();
            stats->candidates = rows.size();
        }
        return std::move(top).finish();
    }

    void save(BinaryWriter& w) const {
        for (const auto& t : tables_) {
            w.floats(t.planes);
            std::vector<lsh::Signature> keys;
            keys.reserve(t.buckets.size());
            for (const auto& [sig, rows] : t.buckets) keys.push_back(sig);
            std::sort(keys.begin(), keys.end());
            w.u64(keys.size());
            for (auto sig : keys) {
                const auto& rows = t.buckets.at(sig);
                w.u64(sig);
                w.u64(rows.size());
                for (auto row : rows) w.u32(row);
            }
        }
    }

    static LshIndex load(BinaryReader& r, std::span<const DocRecord> records, std::size_t dim,
                         const LshParams& params) {
        LshIndex index(dim, params);
        index.store_.validate_batch(records, Metric::cosine);
        for (const auto& rec : records) index.store_.append(rec.id, rec.embedding.values());
        for (auto& t : index.tables_) {
            r.floats(t.planes);
            const std::size_t n_buckets = r.count(16);
            std::size_t filed = 0;
            for (std::size_t b = 0; b < n_buckets; ++b) {
                const lsh::Signature sig = r.u64();
                auto& rows = t.buckets[sig];
                rows.resize(r.count(4));
                for (auto& row : rows) {
                    row = r.u32();
                    if (row >= records.size()) fail(ErrorCode::snapshot_corrupt, "lsh: bad row");
                }
                filed += rows.size();
            }
            if (filed != records.size()) {
                fail(ErrorCode::snapshot_corrupt, "lsh: bucket contents do not match records");
            }
        }
        return index;
    }

private:
    VectorStore store_;
    LshParams params_;
    std::vector<lsh::Table> tables_;
};

} // namespace thistle
