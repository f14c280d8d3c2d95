#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "corpus.hpp"
#include "database.hpp"

namespace thistle {

/// Outcome of one insert-then-query evaluation cell.
///
/// `accuracy` is the fraction of pairs whose expected id is ranked first.
/// `hit_rate_at_k` counts the expected id anywhere in the top k.
/// `recall_vs_exact` is mean recall@k against the exact backend with the same
/// metric (1 for exact backends). Times cover only the load call and the
/// query loop; total is their sum.
struct EvalReport {
    Backend backend = Backend::iter_cosine;
    std::size_t n = 0;
    std::size_t k = 1;
    std::size_t queries = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    double hit_rate_at_k = 0.0;
    double recall_vs_exact = 0.0;
    double mean_distance_evals = 0.0;
    std::chrono::nanoseconds insert_time{0};
    std::chrono::nanoseconds query_time{0};
    std::chrono::nanoseconds total_time{0};
    IndexConfig config{};
};

inline double seconds(std::chrono::nanoseconds t) noexcept {
    return std::chrono::duration<double>(t).count();
}

struct EvalOptions {
    std::size_t k = 1;
    bool compute_recall = true;
};

namespace detail {

inline void check_pairs(std::span<const DocRecord> corpus, std::span<const EvalPair> pairs) {
    std::unordered_set<std::string_view> ids;
    for (const auto& r : corpus) ids.insert(r.id);
    for (const auto& p : pairs) {
        if (!ids.contains(p.expected_id)) {
            fail(ErrorCode::invalid_config, "pair '" + p.query_id + "' expects id '" +
                                                p.expected_id + "', which is not in the corpus");
        }
        if (!p.query_embedding) {
            fail(ErrorCode::invalid_config,
                 "pair '" + p.query_id + "' has no query vector (embed query texts first)");
        }
    }
}

inline double overlap(const QueryResult& got, const QueryResult& truth) {
    if (truth.hits.empty()) return 1.0;
    std::unordered_set<std::string_view> want;
    for (const auto& h : truth.hits) want.insert(h.id);
    std::size_t found = 0;
    for (const auto& h : got.hits) found += want.contains(h.id) ? 1 : 0;
    return static_cast<double>(found) / static_cast<double>(truth.hits.size());
}

} // namespace detail

/// Builds a fresh index from `corpus`, times the load and the query loop,
/// and scores every pair.
inline EvalReport run_eval(std::span<const DocRecord> corpus, std::span<const EvalPair> pairs,
                           const IndexConfig& config, const EvalOptions& options = {}) {
    if (options.k < 1) fail(ErrorCode::invalid_argument, "k must be positive");
    config.validate();
    detail::check_pairs(corpus, pairs);

    EvalReport report;
    report.backend = config.backend;
    report.n = corpus.size();
    report.k = options.k;
    report.queries = pairs.size();
    report.config = config;

    Database db(config);
    report.insert_time = db.load(corpus).elapsed;

    std::vector<QueryResult> results(pairs.size());
    std::vector<QueryStats> stats(pairs.size());
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        results[i] = db.query(*pairs[i].query_embedding, options.k, &stats[i]);
    }
    report.query_time = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    report.total_time = report.insert_time + report.query_time;

    std::size_t hits_at_k = 0;
    double evals = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& hits = results[i].hits;
        if (!hits.empty() && hits.front().id == pairs[i].expected_id) ++report.correct;
        if (std::any_of(hits.begin(), hits.end(),
                        [&](const Hit& h) { return h.id == pairs[i].expected_id; })) {
            ++hits_at_k;
        }
        evals += static_cast<double>(stats[i].distance_evals);
    }
    if (!pairs.empty()) {
        const auto q = static_cast<double>(pairs.size());
        report.accuracy = static_cast<double>(report.correct) / q;
        report.hit_rate_at_k = static_cast<double>(hits_at_k) / q;
        report.mean_distance_evals = evals / q;
    }

    if (is_exact(config.backend)) {
        report.recall_vs_exact = 1.0;
    } else if (options.compute_recall && !pairs.empty()) {
        IndexConfig exact_config = config;
        exact_config.backend = exact_counterpart(config.backend);
        Database exact(exact_config);
        exact.load(corpus);
        double recall = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            recall += detail::overlap(results[i], exact.query(*pairs[i].query_embedding, options.k));
        }
        report.recall_vs_exact = recall / static_cast<double>(pairs.size());
    }
    return report;
}

/// One report per (config, size): each cell indexes the first N corpus
/// records and runs the pairs whose expected id lies in that prefix.
inline std::vector<EvalReport> run_matrix(std::span<const DocRecord> corpus,
                                          std::span<const EvalPair> pairs,
                                          std::span<const IndexConfig> configs,
                                          std::span<const std::size_t> sizes,
                                          const EvalOptions& options = {}) {
    if (sizes.empty()) fail(ErrorCode::invalid_argument, "no corpus sizes given");
    const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
    if (corpus.size() < largest) {
        fail(ErrorCode::invalid_config, "corpus has " + std::to_string(corpus.size()) +
                                            " records, fewer than the largest size " +
                                            std::to_string(largest));
    }
    detail::check_pairs(corpus, pairs);

    std::vector<std::vector<EvalPair>> cell_pairs;
    for (std::size_t n : sizes) {
        if (n == 0) fail(ErrorCode::invalid_argument, "corpus size must be positive");
        std::unordered_set<std::string_view> prefix;
        for (std::size_t i = 0; i < n; ++i) prefix.insert(corpus[i].id);
        auto& selected = cell_pairs.emplace_back();
        for (const auto& p : pairs) {
            if (prefix.contains(p.expected_id)) selected.push_back(p);
        }
        if (selected.empty()) {
            fail(ErrorCode::invalid_config,
                 "no evaluation pair expects a record among the first " + std::to_string(n));
        }
    }

    std::vector<EvalReport> reports;
    reports.reserve(configs.size() * sizes.size());
    for (const auto& config : configs) {
        for (std::size_t s = 0; s < sizes.size(); ++s) {
            reports.push_back(run_eval(corpus.first(sizes[s]), cell_pairs[s], config, options));
        }
    }
    return reports;
}

} // namespace thistle
