#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "vecmath.hpp"

namespace thistle {

/// One ingested document: identifier, cleaned passage text, and its embedding.
struct DocRecord {
    std::string id;
    std::string text;
    Embedding embedding;
};

struct Hit {
    std::string id;
    double distance = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Ranked hits, ascending by distance, ties by ascending id.
struct QueryResult {
    std::vector<Hit> hits;

    bool empty() const noexcept { return hits.empty(); }
    std::size_t size() const noexcept { return hits.size(); }
    friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

inline bool hit_less(double da, std::string_view ida, double db, std::string_view idb) noexcept {
    if (da != db) return da < db;
    return ida < idb;
}

/// True when `r` satisfies the ordering and uniqueness invariants for a request of `k`.
inline bool is_well_formed(const QueryResult& r, std::size_t k) {
    if (r.hits.size() > k) return false;
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < r.hits.size(); ++i) {
        if (!(r.hits[i].distance >= 0.0)) return false;
        if (!seen.insert(r.hits[i].id).second) return false;
        if (i > 0 && hit_less(r.hits[i].distance, r.hits[i].id, r.hits[i - 1].distance,
                              r.hits[i - 1].id)) {
            return false;
        }
    }
    return true;
}

/// Per-query work counters.
struct QueryStats {
    std::size_t distance_evals = 0;
    std::size_t candidates = 0;
};

enum class Backend : unsigned char {
    iter_cosine = 0,
    iter_euclidean = 1,
    hnsw_cosine = 2,
    hnsw_euclidean = 3,
    lsh = 4,
};

inline constexpr Backend kAllBackends[] = {Backend::iter_cosine, Backend::iter_euclidean,
                                           Backend::hnsw_cosine, Backend::hnsw_euclidean,
                                           Backend::lsh};

constexpr std::string_view to_string(Backend b) noexcept {
    switch (b) {
    case Backend::iter_cosine: return "iter-cosine";
    case Backend::iter_euclidean: return "iter-euclidean";
    case Backend::hnsw_cosine: return "hnsw-cosine";
    case Backend::hnsw_euclidean: return "hnsw-euclidean";
    case Backend::lsh: return "lsh";
    }
    return "unknown";
}

/// Accepts the five canonical names, plus "hnsw" for hnsw-cosine.
inline Backend parse_backend(std::string_view name) {
    if (name == "hnsw") return Backend::hnsw_cosine;
    for (Backend b : kAllBackends) {
        if (to_string(b) == name) return b;
    }
    fail(ErrorCode::invalid_argument, "unknown backend '" + std::string(name) + "'");
}

constexpr Metric metric_of(Backend b) noexcept {
    switch (b) {
    case Backend::iter_euclidean:
    case Backend::hnsw_euclidean: return Metric::euclidean;
    default: return Metric::cosine;
    }
}

constexpr bool is_exact(Backend b) noexcept {
    return b == Backend::iter_cosine || b == Backend::iter_euclidean;
}

/// The exact backend sharing `b`'s metric; the oracle for approximate backends.
constexpr Backend exact_counterpart(Backend b) noexcept {
    return metric_of(b) == Metric::cosine ? Backend::iter_cosine : Backend::iter_euclidean;
}

struct HnswParams {
    std::uint32_t M = 16;                ///< neighbor cap per layer; 2M on layer 0
    std::uint32_t ef_construction = 200; ///< beam width while inserting
    std::uint32_t ef_search = 100;       ///< beam width while querying (raised to k if smaller)
    double level_norm = 1.0 / std::log(16.0);
    std::uint32_t max_layers = 16;       ///< hard cap on the number of layers
    std::uint64_t seed = 42;

    /// Parameters for a given M with the conventional level_norm = 1/ln(M).
    static HnswParams with_m(std::uint32_t m) {
        HnswParams p;
        p.M = m;
        p.level_norm = m > 1 ? 1.0 / std::log(static_cast<double>(m)) : 0.0;
        return p;
    }

    void validate() const {
        if (M < 1) fail(ErrorCode::invalid_config, "hnsw: M must be positive");
        if (ef_construction < M) {
            fail(ErrorCode::invalid_config, "hnsw: ef_construction (" +
                                                std::to_string(ef_construction) +
                                                ") must be >= M (" + std::to_string(M) + ")");
        }
        if (ef_search < 1) fail(ErrorCode::invalid_config, "hnsw: ef_search must be >= 1");
        if (!(level_norm >= 0.0) || !std::isfinite(level_norm)) {
            fail(ErrorCode::invalid_config, "hnsw: level_norm must be finite and >= 0");
        }
        if (max_layers < 1) fail(ErrorCode::invalid_config, "hnsw: max_layers must be >= 1");
    }

    friend bool operator==(const HnswParams&, const HnswParams&) = default;
};

struct LshParams {
    std::uint32_t n_projections = 16; ///< hyperplanes per table, i.e. signature bits
    std::uint32_t n_tables = 8;
    std::uint64_t seed = 42;

    void validate() const {
        if (n_projections < 1 || n_projections > 64) {
            fail(ErrorCode::invalid_config, "lsh: n_projections must be in [1, 64]");
        }
        if (n_tables < 1) fail(ErrorCode::invalid_config, "lsh: n_tables must be >= 1");
    }

    friend bool operator==(const LshParams&, const LshParams&) = default;
};

struct IndexConfig {
    Backend backend = Backend::iter_cosine;
    std::size_t dim = kDefaultDim;
    HnswParams hnsw{};
    LshParams lsh{};
    bool normalize_on_insert = false;

    Metric metric() const noexcept { return metric_of(backend); }

    void validate() const {
        if (dim < 1) fail(ErrorCode::invalid_config, "dim must be positive");
        if (backend == Backend::hnsw_cosine || backend == Backend::hnsw_euclidean) {
            hnsw.validate();
        } else if (backend == Backend::lsh) {
            lsh.validate();
        }
    }

    friend bool operator==(const IndexConfig&, const IndexConfig&) = default;
};

/// Dense row-major storage of ids and vectors shared by every backend.
///
/// Rows are addressed by insertion order; that order is the determinism
/// anchor for all index structures built on top. Norms are cached so cosine
/// evaluation costs one dot product per row.
class VectorStore {
public:
    explicit VectorStore(std::size_t dim = 1) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    const std::string& id(std::size_t row) const noexcept { return ids_[row]; }
    std::span<const float> vector(std::size_t row) const noexcept {
        return {data_.data() + row * dim_, dim_};
    }
    double norm(std::size_t row) const noexcept { return norms_[row]; }

    bool contains(std::string_view id) const { return rows_.contains(std::string(id)); }
    std::optional<std::size_t> find(std::string_view id) const {
        auto it = rows_.find(std::string(id));
        if (it == rows_.end()) return std::nullopt;
        return it->second;
    }

    /// Rejects the whole batch (nothing stored) if any record is invalid.
    void validate_batch(std::span<const DocRecord> records, Metric metric) const {
        std::unordered_set<std::string_view> batch_ids;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (r.id.empty()) {
                fail(ErrorCode::empty_id, "record " + std::to_string(i) + " has an empty id");
            }
            if (r.embedding.dim() != dim_) {
                fail(ErrorCode::dimension_mismatch,
                     "record " + std::to_string(i) + " ('" + r.id + "') has dim " +
                         std::to_string(r.embedding.dim()) + ", expected " +
                         std::to_string(dim_));
            }
            if (contains(r.id) || !batch_ids.insert(r.id).second) {
                fail(ErrorCode::duplicate_id, "duplicate id '" + r.id + "'");
            }
            if (metric == Metric::cosine && is_zero(r.embedding.values())) {
                fail(ErrorCode::zero_vector,
                     "record " + std::to_string(i) + " ('" + r.id +
                         "') is a zero vector; cosine distance is undefined");
            }
        }
    }

    std::size_t append(std::string id, std::span<const float> v) {
        const std::size_t row = ids_.size();
        rows_.emplace(id, row);
        ids_.push_back(std::move(id));
        data_.insert(data_.end(), v.begin(), v.end());
        norms_.push_back(detail::norm(v));
        return row;
    }

    void reserve(std::size_t n) {
        ids_.reserve(n);
        data_.reserve(n * dim_);
        norms_.reserve(n);
        rows_.reserve(n);
    }

private:
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> rows_;
};

/// Distance from one fixed query to stored rows, counting evaluations.
class RowDistance {
public:
    RowDistance(const VectorStore& store, Metric metric, std::span<const float> query)
        : store_(store), metric_(metric), query_(query), query_norm_(detail::norm(query)) {}

    double operator()(std::size_t row) const noexcept {
        ++evals_;
        if (metric_ == Metric::cosine) {
            return detail::cosine_from(detail::dot(query_, store_.vector(row)), query_norm_,
                                       store_.norm(row));
        }
        return detail::euclidean(query_, store_.vector(row));
    }

    std::size_t evals() const noexcept { return evals_; }

private:
    const VectorStore& store_;
    Metric metric_;
    std::span<const float> query_;
    double query_norm_;
    mutable std::size_t evals_ = 0;
};

/// Bounded selection of the k smallest (distance, id) pairs.
class TopK {
public:
    TopK(const VectorStore& store, std::size_t k) : store_(store), k_(k) {}

    void push(double dist, std::size_t row) {
        if (k_ == 0) return;
        const Worse worse{store_};
        if (heap_.size() < k_) {
            heap_.emplace_back(dist, row);
            std::push_heap(heap_.begin(), heap_.end(), worse);
        } else if (worse({dist, row}, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), worse);
            heap_.back() = {dist, row};
            std::push_heap(heap_.begin(), heap_.end(), worse);
        }
    }

    QueryResult finish() && {
        std::sort_heap(heap_.begin(), heap_.end(), Worse{store_});
        QueryResult out;
        out.hits.reserve(heap_.size());
        for (const auto& [d, row] : heap_) out.hits.push_back({store_.id(row), d});
        return out;
    }

private:
    using Entry = std::pair<double, std::size_t>;

    // Heap order: a sorts before b when (distance, id) of a is smaller.
    struct Worse {
        const VectorStore& store;
        bool operator()(const Entry& a, const Entry& b) const {
            return hit_less(a.first, store.id(a.second), b.first, store.id(b.second));
        }
    };

    const VectorStore& store_;
    std::size_t k_;
    std::vector<Entry> heap_;
};

/// Common surface of every backend: batch load, then top-k query.
class VectorIndex {
public:
    virtual ~VectorIndex() = default;

    virtual Backend backend() const noexcept = 0;
    virtual const VectorStore& store() const noexcept = 0;

    /// All-or-nothing: on error the index is unchanged.
    virtual void add(std::span<const DocRecord> records) = 0;

    virtual QueryResult query(std::span<const float> q, std::size_t k,
                              QueryStats* stats = nullptr) const = 0;

    Metric metric() const noexcept { return metric_of(backend()); }
    std::size_t dim() const noexcept { return store().dim(); }
    std::size_t size() const noexcept { return store().size(); }

protected:
    void check_query(std::span<const float> q, std::size_t k) const {
        if (k < 1) fail(ErrorCode::invalid_argument, "k must be positive");
        if (q.size() != dim()) {
            fail(ErrorCode::dimension_mismatch,
                 "query has dim " + std::to_string(q.size()) + ", index expects " +
                     std::to_string(dim()));
        }
        if (size() == 0) fail(ErrorCode::empty_index, "query against an empty index");
        if (metric() == Metric::cosine && is_zero(q)) {
            fail(ErrorCode::zero_vector, "cosine query with a zero-norm vector");
        }
    }
};

} // namespace thistle
