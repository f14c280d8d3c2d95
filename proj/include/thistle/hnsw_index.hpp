#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "index.hpp"

namespace thistle {

namespace hnsw {

using NodeId = std::uint32_t;
using Scored = std::pair<double, NodeId>; ///< (distance to query, node)

/// Multi-layer proximity graph over nested node subsets.
///
/// Node ids are rows of the owning VectorStore. A node with top layer L is
/// present on layers 0..L; edges are undirected, stored on both endpoints.
class LayeredGraph {
public:
    std::size_t size() const noexcept { return links_.size(); }
    bool empty() const noexcept { return links_.empty(); }

    std::optional<NodeId> entry_point() const noexcept { return entry_; }
    /// Top layer of the entry point (the highest populated layer).
    std::uint32_t max_layer() const noexcept { return max_layer_; }

    std::uint32_t top_layer(NodeId n) const noexcept {
        return static_cast<std::uint32_t>(links_[n].size() - 1);
    }
    bool on_layer(NodeId n, std::uint32_t layer) const noexcept {
        return n < links_.size() && layer <= top_layer(n);
    }

    std::span<const NodeId> neighbors(NodeId n, std::uint32_t layer) const noexcept {
        return links_[n][layer];
    }

    NodeId add_node(std::uint32_t top_layer) {
        const auto id = static_cast<NodeId>(links_.size());
        links_.emplace_back(top_layer + 1);
        if (!entry_ || top_layer > max_layer_) {
            entry_ = id;
            max_layer_ = top_layer;
        }
        return id;
    }

    void connect(NodeId a, NodeId b, std::uint32_t layer) {
        links_[a][layer].push_back(b);
        links_[b][layer].push_back(a);
    }

    void disconnect(NodeId a, NodeId b, std::uint32_t layer) {
        erase_one(links_[a][layer], b);
        erase_one(links_[b][layer], a);
    }

    friend bool operator==(const LayeredGraph&, const LayeredGraph&) = default;

    void save(BinaryWriter& w) const {
        w.u8(entry_ ? 1 : 0);
        w.u32(entry_.value_or(0));
        w.u32(max_layer_);
        w.u64(links_.size());
        for (const auto& layers : links_) {
            w.u32(static_cast<std::uint32_t>(layers.size() - 1));
            for (const auto& adj : layers) {
                w.u64(adj.size());
                for (NodeId n : adj) w.u32(n);
            }
        }
    }

    static LayeredGraph load(BinaryReader& r) {
        LayeredGraph g;
        const bool has_entry = r.u8() != 0;
        const NodeId entry = r.u32();
        g.max_layer_ = r.u32();
        const std::size_t n = r.count(12);
        g.links_.resize(n);
        for (auto& layers : g.links_) {
            const std::uint32_t top = r.u32();
            if (top > g.max_layer_) fail(ErrorCode::snapshot_corrupt, "hnsw: layer out of range");
            layers.resize(static_cast<std::size_t>(top) + 1);
            for (auto& adj : layers) {
                adj.resize(r.count(4));
                for (NodeId& m : adj) {
                    m = r.u32();
                    if (m >= n) fail(ErrorCode::snapshot_corrupt, "hnsw: edge to unknown node");
                }
            }
        }
        if (has_entry) {
            if (entry >= n) fail(ErrorCode::snapshot_corrupt, "hnsw: bad entry point");
            g.entry_ = entry;
        }
        return g;
    }

private:
    static void erase_one(std::vector<NodeId>& v, NodeId x) {
        auto it = std::find(v.begin(), v.end(), x);
        if (it != v.end()) v.erase(it);
    }

    std::vector<std::vector<std::vector<NodeId>>> links_; // node -> layer -> neighbors
    std::optional<NodeId> entry_;
    std::uint32_t max_layer_ = 0;
};

/// floor(-ln(u) * level_norm) for u uniform in (0, 1].
inline std::uint32_t sample_level(double level_norm, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = 1.0 - uniform(rng);
    const double level = std::floor(-std::log(u) * level_norm);
    if (!(level < static_cast<double>(std::numeric_limits<std::uint32_t>::max()))) {
        return std::numeric_limits<std::uint32_t>::max();
    }
    return static_cast<std::uint32_t>(level);
}

/// Walks to the closest neighbor while it is strictly closer to the query.
/// `dist` maps a node to its distance from the query.
template <class Dist>
NodeId greedy_descend(const LayeredGraph& g, const Dist& dist, NodeId start, std::uint32_t layer) {
    NodeId current = start;
    double current_d = dist(start);
    for (bool moved = true; moved;) {
        moved = false;
        for (NodeId n : g.neighbors(current, layer)) {
            const double d = dist(n);
            if (d < current_d) {
                current_d = d;
                current = n;
                moved = true;
            }
        }
    }
    return current;
}

/// Best-first beam search on one layer, keeping at most `ef` results.
/// Returns (distance, node) pairs ascending.
template <class Dist>
std::vector<Scored> search_layer(const LayeredGraph& g, const Dist& dist, NodeId entry,
                                 std::size_t ef, std::uint32_t layer) {
    ef = std::max<std::size_t>(ef, 1);
    std::vector<bool> visited(g.size(), false);
    std::priority_queue<Scored, std::vector<Scored>, std::greater<>> candidates;
    std::priority_queue<Scored> results;

    const Scored first{dist(entry), entry};
    visited[entry] = true;
    candidates.push(first);
    results.push(first);

    while (!candidates.empty()) {
        const Scored c = candidates.top();
        if (c.first > results.top().first) break;
        candidates.pop();
        for (NodeId n : g.neighbors(c.second, layer)) {
            if (visited[n]) continue;
            visited[n] = true;
            const double d = dist(n);
            if (results.size() < ef || d < results.top().first) {
                candidates.emplace(d, n);
                results.emplace(d, n);
                if (results.size() > ef) results.pop();
            }
        }
    }

    std::vector<Scored> out(results.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        *it = results.top();
        results.pop();
    }
    return out;
}

} // namespace hnsw

/// Hierarchical navigable small world index (cosine or Euclidean).
///
/// Insertion descends greedily through layers above the new node's level,
/// then at each remaining layer runs a beam search of width ef_construction
/// and links to the M nearest results. Overfull neighbor lists are trimmed
/// to their nearest members; trimmed edges are removed from both endpoints,
/// and a node left with no edges on a layer is relinked to a nearby node.
class HnswIndex final : public VectorIndex {
public:
    HnswIndex(std::size_t dim, Metric metric, HnswParams params = {})
        : store_(dim), metric_(metric), params_(params), rng_(params.seed) {
        params_.validate();
    }

    Backend backend() const noexcept override {
        return metric_ == Metric::cosine ? Backend::hnsw_cosine : Backend::hnsw_euclidean;
    }
    const VectorStore& store() const noexcept override { return store_; }
    const hnsw::LayeredGraph& graph() const noexcept { return graph_; }
    const HnswParams& params() const noexcept { return params_; }

    /// Beam width used by subsequent queries.
    void set_ef_search(std::uint32_t ef) {
        if (ef < 1) fail(ErrorCode::invalid_config, "hnsw: ef_search must be >= 1");
        params_.ef_search = ef;
    }

    void add(std::span<const DocRecord> records) override {
        store_.validate_batch(records, metric_);
        store_.reserve(store_.size() + records.size());
        for (const auto& r : records) insert(r.id, r.embedding.values());
    }

    QueryResult query(std::span<const float> q, std::size_t k,
                      QueryStats* stats = nullptr) const override {
        check_query(q, k);
        RowDistance dist(store_, metric_, q);
        hnsw::NodeId current = *graph_.entry_point();
        for (std::uint32_t layer = graph_.max_layer(); layer > 0; --layer) {
            current = hnsw::greedy_descend(graph_, dist, current, layer);
        }
        const std::size_t ef = std::max<std::size_t>(params_.ef_search, k);
        const auto found = hnsw::search_layer(graph_, dist, current, ef, 0);

        TopK top(store_, k);
        for (const auto& [d, n] : found) top.push(d, n);
        if (stats) {
            stats->distance_evals = dist.evals();
            stats->candidates = found.size();
        }
        return std::move(top).finish();
    }

    void save(BinaryWriter& w) const {
        std::ostringstream rng_state;
        rng_state << rng_;
        w.str(rng_state.str());
        graph_.save(w);
    }

    /// Rebuilds an index from stored rows plus a saved graph, without re-inserting.
    static HnswIndex load(BinaryReader& r, std::span<const DocRecord> records, std::size_t dim,
                          Metric metric, const HnswParams& params) {
        HnswIndex index(dim, metric, params);
        index.store_.validate_batch(records, metric);
        for (const auto& rec : records) index.store_.append(rec.id, rec.embedding.values());
        std::istringstream rng_state(r.str());
        rng_state >> index.rng_;
        if (!rng_state) fail(ErrorCode::snapshot_corrupt, "hnsw: bad rng state");
        index.graph_ = hnsw::LayeredGraph::load(r);
        if (index.graph_.size() != records.size()) {
            fail(ErrorCode::snapshot_corrupt, "hnsw: graph size does not match record count");
        }
        return index;
    }

private:
    std::size_t cap(std::uint32_t layer) const noexcept {
        return layer == 0 ? 2 * static_cast<std::size_t>(params_.M) : params_.M;
    }

    double row_distance(std::size_t a, std::size_t b) const noexcept {
        if (metric_ == Metric::cosine) {
            return detail::cosine_from(detail::dot(store_.vector(a), store_.vector(b)),
                                       store_.norm(a), store_.norm(b));
        }
        return detail::euclidean(store_.vector(a), store_.vector(b));
    }

    void insert(const std::string& id, std::span<const float> v) {
        const auto row = store_.append(id, v);
        const std::uint32_t level =
            std::min(hnsw::sample_level(params_.level_norm, rng_), params_.max_layers - 1);

        const auto previous_entry = graph_.entry_point();
        const std::uint32_t previous_top = graph_.max_layer();
        const hnsw::NodeId node = graph_.add_node(level);
        if (node != row) fail(ErrorCode::invalid_argument, "hnsw: store and graph out of sync");
        if (!previous_entry) return;

        auto dist = [&](hnsw::NodeId n) { return row_distance(node, n); };
        hnsw::NodeId current = *previous_entry;
        for (std::uint32_t layer = previous_top; layer > level; --layer) {
            current = hnsw::greedy_descend(graph_, dist, current, layer);
        }
        for (std::uint32_t layer = std::min(level, previous_top) + 1; layer-- > 0;) {
            const auto found =
                hnsw::search_layer(graph_, dist, current, params_.ef_construction, layer);
            const std::size_t links = std::min<std::size_t>(params_.M, found.size());
            for (std::size_t i = 0; i < links; ++i) {
                graph_.connect(node, found[i].second, layer);
            }
            for (std::size_t i = 0; i < links; ++i) shrink(found[i].second, layer);
            current = found.front().second;
        }
    }

    /// Trims `n`'s neighbor list on `layer` to its cap, keeping the nearest.
    void shrink(hnsw::NodeId n, std::uint32_t layer) {
        const auto adj = graph_.neighbors(n, layer);
        const std::size_t limit = cap(layer);
        if (adj.size() <= limit) return;
        std::vector<hnsw::Scored> scored;
        scored.reserve(adj.size());
        for (hnsw::NodeId m : adj) scored.emplace_back(row_distance(n, m), m);
        std::sort(scored.begin(), scored.end());
        for (std::size_t i = limit; i < scored.size(); ++i) {
            const hnsw::NodeId dropped = scored[i].second;
            graph_.disconnect(n, dropped, layer);
            if (graph_.neighbors(dropped, layer).empty()) relink(dropped, n, layer);
        }
    }

    /// `orphan` lost its last edge on `layer` (to `from`): link it to the
    /// nearest of from's neighbors that still has room.
    void relink(hnsw::NodeId orphan, hnsw::NodeId from, std::uint32_t layer) {
        std::optional<hnsw::Scored> best;
        for (hnsw::NodeId m : graph_.neighbors(from, layer)) {
            if (graph_.neighbors(m, layer).size() >= cap(layer)) continue;
            const hnsw::Scored s{row_distance(orphan, m), m};
            if (!best || s < *best) best = s;
        }
        if (best) graph_.connect(orphan, best->second, layer);
    }

    VectorStore store_;
    Metric metric_;
    HnswParams params_;
    std::mt19937_64 rng_;
    hnsw::LayeredGraph graph_;
};

} // namespace thistle
