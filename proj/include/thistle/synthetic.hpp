#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "index.hpp"

namespace thistle::synthetic {

inline std::string doc_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doc-%07zu", i);
    return buf;
}

inline std::vector<float> gaussian(std::mt19937_64& rng, std::size_t dim, double sigma = 1.0) {
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<float> v(dim);
    for (float& x : v) x = static_cast<float>(g(rng));
    return v;
}

inline std::vector<float> unit(std::vector<float> v) {
    double n2 = 0.0;
    for (float x : v) n2 += static_cast<double>(x) * x;
    const double inv = 1.0 / std::sqrt(n2);
    for (float& x : v) x = static_cast<float>(x * inv);
    return v;
}

/// `n` isotropic standard-Gaussian records with ids doc-0000000, doc-0000001, ...
inline std::vector<DocRecord> gaussian_records(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<DocRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({doc_id(i), {}, Embedding(gaussian(rng, dim))});
    }
    return out;
}

inline std::vector<Embedding> gaussian_queries(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Embedding> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(gaussian(rng, dim));
    return out;
}

struct Workload {
    std::vector<DocRecord> records;
    std::vector<EvalPair> pairs;
};

struct NoisyDuplicateSpec {
    std::size_t corpus_size = 10000;
    std::size_t dim = 64;
    std::size_t queries = 100;
    /// Queries target records among the first `query_pool` rows, evenly spaced,
    /// so every corpus prefix of at least that size holds all expected answers.
    std::size_t query_pool = 100;
    /// Norm of the perturbation added to the (unit) source record.
    double noise = 2.0;
    std::uint64_t seed = 42;
};

/// Unit-norm random records; each query is a perturbed copy of one record,
/// which is its expected answer. On unit vectors cosine and Euclidean
/// rankings coincide, so all backends answer the same question.
inline Workload noisy_duplicates(const NoisyDuplicateSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    Workload w;
    w.records.reserve(spec.corpus_size);
    for (std::size_t i = 0; i < spec.corpus_size; ++i) {
        w.records.push_back({doc_id(i), "synthetic passage " + std::to_string(i),
                             Embedding(unit(gaussian(rng, spec.dim)))});
    }
    const std::size_t pool = std::min(spec.query_pool, spec.corpus_size);
    const double sigma = spec.noise / std::sqrt(static_cast<double>(spec.dim));
    // Separate stream, so the queries do not depend on corpus_size.
    std::mt19937_64 query_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t q = 0; q < spec.queries && pool > 0; ++q) {
        const std::size_t target = (q * pool) / std::max<std::size_t>(spec.queries, 1) % pool;
        const auto base = w.records[target].embedding.values();
        auto noise = gaussian(query_rng, spec.dim, sigma);
        for (std::size_t i = 0; i < spec.dim; ++i) noise[i] += base[i];
        w.pairs.push_back({"q-" + std::to_string(q), Embedding(unit(std::move(noise))), {},
                           w.records[target].id});
    }
    return w;
}

} // namespace thistle::synthetic
