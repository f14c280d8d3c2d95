#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "corpus.hpp"
#include "database.hpp"
#include "eval.hpp"
#include "report.hpp"
#include "sidecar.hpp"
#include "snapshot.hpp"
#include "synthetic.hpp"

namespace thistle::cli {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// --seed default: THISTLE_SEED when set, otherwise 42.
inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("THISTLE_SEED")) {
        std::uint64_t v = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(ErrorCode::invalid_argument, "THISTLE_SEED must be an unsigned integer");
        }
        return v;
    }
    return kDefaultSeed;
}

/// Parses "0.1, 2, -3e-1" (commas and/or whitespace) into an embedding.
inline Embedding parse_vector_list(std::string_view text) {
    std::vector<float> values;
    std::size_t pos = 0;
    auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (pos < text.size()) {
        while (pos < text.size() && is_sep(text[pos])) ++pos;
        if (pos >= text.size()) break;
        std::size_t end = pos;
        while (end < text.size() && !is_sep(text[end])) ++end;
        const auto token = text.substr(pos, end - pos);
        float v = 0.0f;
        const char* first = token.data();
        if (!token.empty() && token.front() == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            fail(ErrorCode::parse_error, "bad vector component '" + std::string(token) + "'");
        }
        values.push_back(v);
        pos = end;
    }
    if (values.empty()) fail(ErrorCode::parse_error, "empty query vector");
    return Embedding(std::move(values));
}

inline Embedding read_vector_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && body[first] == '[') {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse_error, path.string() + ": " + e.what());
        }
        return detail::parse_vector(arr, path.string() + ": ");
    }
    return parse_vector_list(body);
}

/// Flags shared by the subcommands that build indexes.
struct IndexFlags {
    std::string backend = "iter-cosine";
    std::size_t dim = kDefaultDim;
    std::uint32_t M = 16;
    std::uint32_t ef_construction = 200;
    std::uint32_t ef_search = 100;
    double level_norm = -1.0; ///< negative: derive from M
    std::uint32_t max_layers = 16;
    std::uint32_t projections = 16;
    std::uint32_t tables = 8;
    std::uint64_t seed = kDefaultSeed;
    bool normalize = false;

    void attach(CLI::App& app, bool with_backend) {
        if (with_backend) {
            app.add_option("--backend", backend,
                           "iter-cosine | iter-euclidean | hnsw-cosine | hnsw-euclidean | lsh")
                ->capture_default_str();
        }
        app.add_option("--dim", dim, "embedding dimension")->capture_default_str();
        app.add_option("--M", M, "HNSW neighbors per node per layer (2M on layer 0)")->capture_default_str();
        app.add_option("--ef-construction", ef_construction, "HNSW insert beam width")->capture_default_str();
        app.add_option("--ef-search", ef_search, "HNSW query beam width")->capture_default_str();
        app.add_option("--level-norm", level_norm, "HNSW level multiplier (default 1/ln(M))");
        app.add_option("--max-layers", max_layers, "HNSW layer cap")->capture_default_str();
        app.add_option("--projections", projections, "LSH hyperplanes per table")->capture_default_str();
        app.add_option("--tables", tables, "LSH hash tables")->capture_default_str();
        app.add_option("--seed", seed, "RNG seed (env THISTLE_SEED overrides the default)");
        app.add_flag("--normalize", normalize, "L2-normalize vectors on insert and query");
    }

    IndexConfig config_for(Backend b) const {
        IndexConfig c;
        c.backend = b;
        c.dim = dim;
        c.normalize_on_insert = normalize;
        c.hnsw = HnswParams::with_m(M);
        if (level_norm >= 0.0) c.hnsw.level_norm = level_norm;
        c.hnsw.ef_construction = ef_construction;
        c.hnsw.ef_search = ef_search;
        c.hnsw.max_layers = max_layers;
        c.hnsw.seed = seed;
        c.lsh.n_projections = projections;
        c.lsh.n_tables = tables;
        c.lsh.seed = seed;
        c.validate();
        return c;
    }
};

struct EmbedderFlags {
    std::string mode = "file";
    SidecarConfig sidecar;

    void attach(CLI::App& app) {
        app.add_option("--embedder", mode, "file (vectors in input) | sidecar")
            ->check(CLI::IsMember({"file", "sidecar"}))
            ->capture_default_str();
        app.add_option("--sidecar-cmd", sidecar.command, "embedding sidecar command");
        app.add_option("--pooling", sidecar.pooling, "sidecar pooling: cls | mean | max")
            ->check(CLI::IsMember({"cls", "mean", "max"}))
            ->capture_default_str();
        app.add_option("--model", sidecar.model, "sidecar model name");
    }

    bool sidecar_mode() const { return mode == "sidecar"; }
    void validate() const {
        if (sidecar_mode()) sidecar.validate();
    }
};

inline std::vector<Backend> parse_backends(const std::string& list) {
    if (list == "all") return {std::begin(kAllBackends), std::end(kAllBackends)};
    std::vector<Backend> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        if (item == "all") fail(ErrorCode::invalid_argument, "'all' cannot be combined with names");
        out.push_back(parse_backend(item));
    }
    if (out.empty()) fail(ErrorCode::invalid_argument, "no backends given");
    return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& list) {
    std::vector<std::size_t> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || v == 0) {
            fail(ErrorCode::invalid_argument, "bad size '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) fail(ErrorCode::invalid_argument, "no sizes given");
    return out;
}

inline void print_info(std::ostream& out, const SnapshotInfo& info) {
    const auto& c = info.config;
    out << "format_version: " << int(kSnapshotVersion) << '\n'
        << "backend: " << to_string(c.backend) << '\n'
        << "metric: " << to_string(c.metric()) << '\n'
        << "dim: " << c.dim << '\n'
        << "N: " << info.record_count << '\n'
        << "normalize: " << (c.normalize_on_insert ? "true" : "false") << '\n';
    if (c.backend == Backend::hnsw_cosine || c.backend == Backend::hnsw_euclidean) {
        out << "M: " << c.hnsw.M << '\n'
            << "ef_construction: " << c.hnsw.ef_construction << '\n'
            << "ef_search: " << c.hnsw.ef_search << '\n'
            << "level_norm: " << std::setprecision(17) << c.hnsw.level_norm << '\n'
            << "max_layers: " << c.hnsw.max_layers << '\n'
            << "seed: " << c.hnsw.seed << '\n';
    } else if (c.backend == Backend::lsh) {
        out << "projections: " << c.lsh.n_projections << '\n'
            << "tables: " << c.lsh.n_tables << '\n'
            << "seed: " << c.lsh.seed << '\n';
    }
}

/// Runs the command line; returns the process exit status. Failures print a
/// single "error: <code>: <message>" line to `err` and return 1.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"thistle: vector database with exact, HNSW and LSH backends"};
    app.require_subcommand(1);

    IndexFlags load_flags, bench_flags;
    EmbedderFlags load_embed, query_embed, bench_embed;
    std::string load_input, load_index;
    std::string query_index, query_vector, query_vector_file, query_text;
    std::size_t query_k = 10;
    std::uint32_t query_ef = 0;
    std::string info_index;
    std::string bench_corpus, bench_pairs, bench_sizes = "100,1000,10000", bench_backends = "all";
    std::string bench_out = "bench_report.jsonl", bench_plots;
    std::size_t bench_k = 1, bench_queries = 100, bench_pool = 100;
    double bench_noise = 2.0;

    try {
        const std::uint64_t seed = default_seed();
        load_flags.seed = bench_flags.seed = seed;
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    }

    auto* load = app.add_subcommand("load", "ingest a corpus and write a snapshot");
    load->add_option("corpus", load_input, "corpus file (JSON Lines)")->required();
    load->add_option("-o,--index", load_index, "snapshot path to write")->required();
    load_flags.attach(*load, true);
    load_embed.attach(*load);

    auto* query = app.add_subcommand("query", "top-k query against a snapshot");
    query->add_option("-i,--index", query_index, "snapshot path")->required();
    auto* vec_opt = query->add_option("--vector", query_vector, "comma-separated query vector");
    auto* file_opt = query->add_option("--vector-file", query_vector_file, "file holding the query vector");
    auto* text_opt = query->add_option("--text", query_text, "query text (sidecar embedder)");
    vec_opt->excludes(file_opt)->excludes(text_opt);
    file_opt->excludes(text_opt);
    query->add_option("-k,--k", query_k, "number of results")->capture_default_str();
    query->add_option("--ef-search", query_ef, "override the stored HNSW ef_search");
    query_embed.attach(*query);

    auto* info = app.add_subcommand("info", "print a snapshot's header");
    info->add_option("-i,--index", info_index, "snapshot path")->required();

    auto* bench = app.add_subcommand("bench", "insert-then-query evaluation matrix");
    bench->add_option("--corpus", bench_corpus, "corpus file; omit for the synthetic workload");
    bench->add_option("--pairs", bench_pairs, "evaluation pair file (required with --corpus)");
    bench->add_option("--sizes", bench_sizes, "comma-separated corpus sizes")->capture_default_str();
    bench->add_option("--backends", bench_backends, "comma-separated backends or 'all'")->capture_default_str();
    bench->add_option("-k,--k", bench_k, "results per query")->capture_default_str();
    bench->add_option("--out", bench_out, "report file (JSON Lines)")->capture_default_str();
    bench->add_option("--plots", bench_plots, "directory for SVG plots");
    bench->add_option("--queries", bench_queries, "synthetic: number of queries")->capture_default_str();
    bench->add_option("--query-pool", bench_pool, "synthetic: queries target the first this-many records")
        ->capture_default_str();
    bench->add_option("--noise", bench_noise, "synthetic: query perturbation norm")->capture_default_str();
    bench_flags.attach(*bench, false);
    bench_flags.dim = 64;
    bench_embed.attach(*bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: invalid_argument: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*load) {
            const IndexConfig config = load_flags.config_for(parse_backend(load_flags.backend));
            load_embed.validate();
            const auto records = load_embed.sidecar_mode()
                                     ? embed_corpus(load_embed.sidecar, load_input, config.dim)
                                     : ingest(load_input, config.dim);
            Database db(config);
            const auto report = db.load(records);
            save_snapshot(db, load_index);
            out << "loaded " << report.inserted << " records in " << std::fixed
                << std::setprecision(6) << report.seconds() << " s -> " << load_index << '\n';
        } else if (*query) {
            if (query_k < 1) fail(ErrorCode::invalid_argument, "k must be positive");
            query_embed.validate();
            if (query_vector.empty() && query_vector_file.empty() && query_text.empty()) {
                fail(ErrorCode::invalid_argument, "give one of --vector, --vector-file, --text");
            }
            if (!query_text.empty() && !query_embed.sidecar_mode()) {
                fail(ErrorCode::invalid_argument,
                     "text queries need an embedder: pass --embedder sidecar --sidecar-cmd <command>");
            }
            Database db = load_snapshot(query_index);
            if (query_ef > 0) {
                if (auto* h = dynamic_cast<HnswIndex*>(&db.index())) h->set_ef_search(query_ef);
            }
            Embedding q = !query_vector.empty()        ? parse_vector_list(query_vector)
                          : !query_vector_file.empty() ? read_vector_file(query_vector_file)
                                                       : embed_texts(query_embed.sidecar,
                                                                     std::vector{query_text},
                                                                     db.dim())
                                                             .front();
            const auto result = db.query(q, query_k);
            if (result.empty()) out << "# no candidates\n";
            std::size_t rank = 1;
            for (const auto& h : result.hits) {
                out << rank++ << '\t' << h.id << '\t' << std::setprecision(9) << h.distance;
                const auto text = db.text_of(h.id);
                if (text && !text->empty()) out << '\t' << *text;
                out << '\n';
            }
        } else if (*info) {
            print_info(out, read_snapshot_info(info_index));
        } else if (*bench) {
            const auto backends = parse_backends(bench_backends);
            const auto sizes = parse_sizes(bench_sizes);
            std::vector<IndexConfig> configs;
            for (Backend b : backends) configs.push_back(bench_flags.config_for(b));
            bench_embed.validate();
            if (bench_k < 1) fail(ErrorCode::invalid_argument, "k must be positive");

            synthetic::Workload w;
            if (bench_corpus.empty()) {
                if (!bench_pairs.empty()) fail(ErrorCode::invalid_argument, "--pairs needs --corpus");
                synthetic::NoisyDuplicateSpec spec;
                spec.corpus_size = *std::max_element(sizes.begin(), sizes.end());
                spec.dim = bench_flags.dim;
                spec.queries = bench_queries;
                spec.query_pool = std::min(bench_pool, *std::min_element(sizes.begin(), sizes.end()));
                spec.noise = bench_noise;
                spec.seed = bench_flags.seed;
                w = synthetic::noisy_duplicates(spec);
            } else {
                if (bench_pairs.empty()) fail(ErrorCode::invalid_argument, "--corpus needs --pairs");
                w.records = bench_embed.sidecar_mode()
                                ? embed_corpus(bench_embed.sidecar, bench_corpus, bench_flags.dim)
                                : ingest(bench_corpus, bench_flags.dim);
                w.pairs = ingest_pairs(bench_pairs, bench_flags.dim);
                std::vector<std::string> texts;
                std::vector<std::size_t> need;
                for (std::size_t i = 0; i < w.pairs.size(); ++i) {
                    if (!w.pairs[i].query_embedding) {
                        if (!bench_embed.sidecar_mode()) {
                            fail(ErrorCode::invalid_argument,
                                 "pair '" + w.pairs[i].query_id +
                                     "' has only text: pass --embedder sidecar --sidecar-cmd <command>");
                        }
                        texts.push_back(w.pairs[i].query_text);
                        need.push_back(i);
                    }
                }
                auto vectors = embed_texts(bench_embed.sidecar, texts, bench_flags.dim);
                for (std::size_t j = 0; j < need.size(); ++j) {
                    w.pairs[need[j]].query_embedding = std::move(vectors[j]);
                }
            }

            EvalOptions options;
            options.k = bench_k;
            const auto reports = run_matrix(w.records, w.pairs, configs, sizes, options);
            out << render_table(reports);
            write_report_jsonl(bench_out, reports);
            out << "report: " << bench_out << '\n';
            if (!bench_plots.empty()) {
                for (const auto& p : write_plots(bench_plots, reports)) out << "plot: " << p.string() << '\n';
            }
        }
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace thistle::cli
