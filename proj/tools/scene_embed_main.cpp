#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scene_embed/ade20k.hpp"
#include "scene_embed/cooccur.hpp"
#include "scene_embed/corpus.hpp"
#include "scene_embed/embedding.hpp"
#include "scene_embed/eval.hpp"
#include "scene_embed/lsa.hpp"
#include "scene_embed/spatial.hpp"
#include "scene_embed/util.hpp"
#include "scene_embed/w2v.hpp"

namespace {

using namespace scene_embed;
using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = all cores
    bool deterministic = false;
};

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Each output gets `<path>.manifest.json` carrying the resolved config and
/// fingerprints of every input file. No timestamps, so reruns are diffable.
void write_manifest(const std::string& out_path, const std::string& command,
                    const ordered_json& config, const std::vector<std::string>& inputs) {
    ordered_json m;
    m["tool"] = "scene_embed";
    m["version"] = kVersion;
    m["command"] = command;
    ordered_json in = ordered_json::object();
    for (const auto& p : inputs) in[p] = hash_hex(fnv1a64_file(p));
    m["inputs"] = std::move(in);
    m["config"] = config;
    std::ofstream out(out_path + ".manifest.json", std::ios::binary);
    if (!out) throw Error("cannot open " + out_path + ".manifest.json for writing");
    out << m.dump(2) << "\n";
    if (!out) throw Error("failed writing manifest for " + out_path);
}

ordered_json global_config(const GlobalOpts& g) {
    ordered_json j;
    j["seed"] = g.seed;
    j["threads"] = g.threads;
    j["deterministic"] = g.deterministic;
    return j;
}

int trainer_threads(const GlobalOpts& g) {
    if (g.deterministic) return 1;
    return g.threads > 0 ? g.threads : 1;  // hogwild only on explicit request
}

TrainConfig make_train_config(const GlobalOpts& g, int d, int epochs, double lr, double t,
                              int n_pos, int n_neg, double neg_exp, int strict) {
    TrainConfig cfg;
    cfg.d = d;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.subsample_t = t;
    cfg.n_positive = n_pos;
    cfg.n_negative = n_neg;
    cfg.neg_exponent = neg_exp;
    cfg.seed = g.seed;
    if (strict >= 0) cfg.strict_negatives = strict != 0;
    cfg.threads = trainer_threads(g);
    return cfg;
}

ordered_json train_config_json(const TrainConfig& cfg) {
    ordered_json j;
    j["d"] = cfg.d;
    j["epochs"] = cfg.epochs;
    j["learning_rate"] = cfg.learning_rate;
    j["subsample_t"] = cfg.subsample_t;
    j["n_positive"] = cfg.n_positive;
    j["n_negative"] = cfg.n_negative;
    j["neg_exponent"] = cfg.neg_exponent;
    j["seed"] = cfg.seed;
    if (cfg.strict_negatives) j["strict_negatives"] = *cfg.strict_negatives;
    j["threads"] = cfg.threads;
    return j;
}

SpatialOptions make_spatial_options(int radius, const std::string& distance,
                                    const std::string& denominator, int part_depth) {
    SpatialOptions opt;
    opt.radius = radius;
    if (distance == "one_minus") {
        opt.distance = SpatialOptions::Distance::one_minus;
    } else if (distance == "reciprocal") {
        opt.distance = SpatialOptions::Distance::reciprocal;
    } else {
        throw Error("unknown distance '" + distance + "'");
    }
    if (denominator == "ring") {
        opt.denominator = SpatialOptions::Denominator::ring;
    } else if (denominator == "full") {
        opt.denominator = SpatialOptions::Denominator::full;
    } else {
        throw Error("unknown denominator '" + denominator + "'");
    }
    opt.part_depth = part_depth;
    return opt;
}

void write_json_out(const ordered_json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("failed writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object and scene embeddings from segmentation-annotated image corpora"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Base RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
    app.add_flag("--deterministic", g.deterministic,
                 "Force single-threaded training for bitwise-reproducible runs");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load, validate, filter, and save a corpus");
    std::string in_path, out_path, format = "jsonl", segmap_dir;
    int min_freq = 5, min_objects = 2;
    bool no_filter = false;
    ingest->add_option("--in", in_path, "Input path (JSONL file or dataset root)")->required();
    ingest->add_option("--format", format, "jsonl|ade20k")->capture_default_str();
    ingest->add_option("--out", out_path, "Output corpus JSONL")->required();
    ingest->add_option("--min-freq", min_freq, "Minimum images per label")->capture_default_str();
    ingest->add_option("--min-objects", min_objects, "Minimum distinct objects per image")
        ->capture_default_str();
    ingest->add_flag("--no-filter", no_filter, "Skip frequency filtering");
    ingest->add_option("--segmaps", segmap_dir,
                       "Convert segmentation PNGs into SEGMAP files in this directory (ade20k)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted structure");
    int sy_scenes = 20, sy_objects = 200, sy_images = 50, sy_supercats = 2, sy_per_image = 8;
    double sy_overlap = 0.2;
    std::string sy_assignment;
    synth->add_option("--out", out_path, "Output corpus JSONL")->required();
    synth->add_option("--scenes", sy_scenes, "Scene categories")->capture_default_str();
    synth->add_option("--objects", sy_objects, "Object labels")->capture_default_str();
    synth->add_option("--images-per-scene", sy_images, "Images per category")
        ->capture_default_str();
    synth->add_option("--supercats", sy_supercats, "Supercategories, assigned round-robin")
        ->capture_default_str();
    synth->add_option("--assignment", sy_assignment,
                      "Explicit per-scene supercategory list, comma-separated");
    synth->add_option("--overlap", sy_overlap, "Shared fraction of the object pool")
        ->capture_default_str();
    synth->add_option("--objects-per-image", sy_per_image, "Objects drawn per image")
        ->capture_default_str();

    // matrix
    auto* matrix = app.add_subcommand("matrix", "Build the scene-object co-occurrence matrix");
    std::string corpus_path, norm = "raw";
    bool idf_log = false;
    matrix->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    matrix->add_option("--norm", norm, "raw|norm|log|tfidf")->capture_default_str();
    matrix->add_flag("--idf-log", idf_log, "Use log(m/df) instead of m/df for tfidf");
    matrix->add_option("--out", out_path, "Output matrix TSV")->required();

    // train-lsa
    auto* tlsa = app.add_subcommand("train-lsa", "Truncated SVD embeddings (d = 50, 100, 300 in "
                                                 "the source experiments)");
    std::string matrix_path, out_objects, out_scenes;
    int d = 100;
    bool scale_singular = false;
    tlsa->add_option("--matrix", matrix_path, "Co-occurrence matrix TSV")->required();
    tlsa->add_option("--d", d, "Embedding dimension")->capture_default_str();
    tlsa->add_flag("--scale-singular", scale_singular, "Scale embeddings by singular values");
    tlsa->add_option("--out-objects", out_objects, "Object embeddings TSV")->required();
    tlsa->add_option("--out-scenes", out_scenes, "Scene embeddings TSV")->required();

    // shared training flags
    int epochs = 100, n_pos = 5, n_neg = 20, strict = -1;
    double lr = 0.01, sub_t = 0.005, neg_exp = 0.75;
    std::string log_path;
    auto add_train_opts = [&](CLI::App* cmd, bool with_subsample) {
        cmd->add_option("--d", d, "Embedding dimension")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        if (with_subsample) {
            cmd->add_option("--t", sub_t, "Subsampling threshold")->capture_default_str();
        }
        cmd->add_option("--n-pos", n_pos, "Positive samples per step")->capture_default_str();
        cmd->add_option("--n-neg", n_neg, "Negative samples per step")->capture_default_str();
        cmd->add_option("--neg-exp", neg_exp, "Negative-sampling exponent")->capture_default_str();
        cmd->add_option("--strict-negatives", strict,
                        "1 = resample negatives that hit the context, 0 = allow (-1 = default)")
            ->capture_default_str();
        cmd->add_option("--log", log_path, "Training log CSV");
    };

    auto* tsg = app.add_subcommand("train-skipgram", "Scene-to-objects Skipgram with negative "
                                                     "sampling");
    tsg->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    add_train_opts(tsg, true);
    tsg->add_option("--out-scenes", out_scenes, "Scene embeddings TSV")->required();
    tsg->add_option("--out-objects", out_objects, "Object embeddings TSV")->required();

    auto* tcb = app.add_subcommand("train-cbow", "Object-context-to-scene CBOW with full softmax");
    tcb->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    add_train_opts(tcb, false);
    tcb->add_option("--out-objects", out_objects, "Object embeddings TSV")->required();
    tcb->add_option("--out-scenes", out_scenes, "Scene embeddings TSV")->required();

    // parse-spatial
    auto* pspat = app.add_subcommand("parse-spatial", "Build spatial-context graphs from label "
                                                      "maps");
    std::string maps_dir, stats_path, distance = "one_minus", denominator = "ring";
    int radius = 3, part_depth = 0;
    pspat->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    pspat->add_option("--maps-dir", maps_dir, "Base directory for relative label-map paths");
    pspat->add_option("--radius", radius, "Dilation radius in pixels")->capture_default_str();
    pspat->add_option("--distance", distance, "one_minus|reciprocal")->capture_default_str();
    pspat->add_option("--denominator", denominator, "ring|full")->capture_default_str();
    pspat->add_option("--part-depth", part_depth, "Ancestor link depth (0 = unlimited)")
        ->capture_default_str();
    pspat->add_option("--out", out_path, "Output graphs JSONL")->required();
    pspat->add_option("--stats", stats_path, "Parse statistics JSON");

    // train-spatial
    auto* tspat = app.add_subcommand("train-spatial", "Skipgram over spatial context graphs");
    std::string graphs_path;
    tspat->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
    tspat->add_option("--graphs", graphs_path, "Graphs JSONL from parse-spatial")->required();
    add_train_opts(tspat, false);
    tspat->add_option("--out", out_path, "Object embeddings TSV")->required();

    // neighbors
    auto* nb = app.add_subcommand("neighbors", "Nearest neighbors of a probe token");
    std::string emb_path, probe, nb_format = "tsv";
    int k = 10;
    nb->add_option("--embeddings", emb_path, "Embeddings TSV")->required();
    nb->add_option("--probe", probe, "Probe token")->required();
    nb->add_option("--k", k, "Neighbor count")->capture_default_str();
    nb->add_option("--format", nb_format, "tsv|md")->capture_default_str();
    nb->add_option("--out", out_path, "Write the table here instead of stdout");

    // ranksum
    auto* rs = app.add_subcommand("ranksum", "Within vs between supercategory rank-sum test");
    std::string supercats_path;
    rs->add_option("--embeddings", emb_path, "Scene embeddings TSV")->required();
    rs->add_option("--supercats", supercats_path, "scene<TAB>supercategory file")->required();
    rs->add_option("--out", out_path, "Result JSON");

    // graph
    auto* gr = app.add_subcommand("graph", "Threshold graph and connected components");
    double threshold = 0.6;
    gr->add_option("--embeddings", emb_path, "Embeddings TSV")->required();
    gr->add_option("--threshold", threshold, "Cosine distance threshold")->capture_default_str();
    gr->add_option("--out", out_path, "Graph JSON")->required();

    // classify
    auto* cls = app.add_subcommand("classify", "Embedding-space scene classification");
    std::string train_path, test_path, method = "nearest_centroid";
    cls->add_option("--train", train_path, "Training corpus JSONL")->required();
    cls->add_option("--test", test_path, "Test corpus JSONL")->required();
    cls->add_option("--embeddings", emb_path, "Object embeddings TSV (projection)")->required();
    cls->add_option("--method", method, "nearest_centroid|logistic")->capture_default_str();
    cls->add_option("--out", out_path, "Result JSON");

    // export-dist
    auto* ed = app.add_subcommand("export-dist", "Pairwise cosine distance matrix TSV");
    ed->add_option("--embeddings", emb_path, "Embeddings TSV")->required();
    ed->add_option("--out", out_path, "Output TSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // collapse CLI11's per-error exit codes onto 0 (help/version) or 1
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (ingest->parsed()) {
            CorpusFormat fmt;
            if (format == "jsonl") {
                fmt = CorpusFormat::jsonl;
            } else if (format == "ade20k") {
                fmt = CorpusFormat::ade20k;
            } else {
                std::cerr << "unknown format '" << format << "'\n";
                return 1;
            }
            Corpus c = load_corpus(in_path, fmt);
            std::int64_t converted = 0, convert_failures = 0;
            if (!segmap_dir.empty()) {
                if (fmt != CorpusFormat::ade20k) {
                    std::cerr << "--segmaps requires --format ade20k\n";
                    return 1;
                }
                SegmapConversionStats st = convert_ade20k_segmaps(in_path, c, segmap_dir);
                converted = st.images_converted;
                convert_failures = static_cast<std::int64_t>(st.failures.size());
                for (const auto& f : st.failures) std::cerr << "segmap: " << f << "\n";
            }
            const std::size_t before = c.images.size();
            if (!no_filter) c = filter_corpus(c, min_freq, min_objects);
            save_corpus_jsonl(c, out_path);
            ordered_json cfg = global_config(g);
            cfg["format"] = format;
            cfg["min_freq"] = min_freq;
            cfg["min_objects"] = min_objects;
            cfg["no_filter"] = no_filter;
            if (!segmap_dir.empty()) cfg["segmaps"] = segmap_dir;
            write_manifest(out_path, "ingest", cfg,
                           fmt == CorpusFormat::jsonl ? std::vector<std::string>{in_path}
                                                      : std::vector<std::string>{});
            std::cout << "images: " << before << " -> " << c.images.size()
                      << ", objects: " << c.objects.size() << ", scenes: " << c.scenes.size();
            if (!segmap_dir.empty()) {
                std::cout << ", segmaps: " << converted << " converted, " << convert_failures
                          << " failed";
            }
            std::cout << "\n";
        } else if (synth->parsed()) {
            SyntheticSpec spec;
            spec.n_scenes = sy_scenes;
            spec.n_objects = sy_objects;
            spec.images_per_scene = sy_images;
            spec.overlap = sy_overlap;
            spec.seed = g.seed;
            spec.objects_per_image = sy_per_image;
            if (!sy_assignment.empty()) {
                for (const auto& s : split(sy_assignment, ',')) {
                    spec.supercategory.push_back(trim(s));
                }
            } else {
                for (int s = 0; s < sy_scenes; ++s) {
                    spec.supercategory.push_back("supercat_" + std::to_string(s % sy_supercats));
                }
            }
            Corpus c = generate_synthetic(spec);
            save_corpus_jsonl(c, out_path);
            ordered_json cfg = global_config(g);
            cfg["scenes"] = sy_scenes;
            cfg["objects"] = sy_objects;
            cfg["images_per_scene"] = sy_images;
            cfg["overlap"] = sy_overlap;
            cfg["objects_per_image"] = sy_per_image;
            cfg["supercategory"] = spec.supercategory;
            write_manifest(out_path, "synth", cfg, {});
            std::cout << "images: " << c.images.size() << ", objects: " << c.objects.size()
                      << ", scenes: " << c.scenes.size() << "\n";
        } else if (matrix->parsed()) {
            const Corpus c = load_corpus_jsonl(corpus_path);
            CooccurrenceMatrix x = build_matrix(c, g.threads);
            const Normalization target = normalization_from_tag(norm);
            if (target != Normalization::raw) {
                NormalizeOptions nopt;
                nopt.idf_log = idf_log;
                x = normalize(x, target, nopt);
            }
            write_matrix_tsv(x, out_path);
            ordered_json cfg = global_config(g);
            cfg["norm"] = norm;
            cfg["idf_log"] = idf_log;
            write_manifest(out_path, "matrix", cfg, {corpus_path});
        } else if (tlsa->parsed()) {
            const CooccurrenceMatrix x = read_matrix_tsv(matrix_path);
            LsaOptions opt;
            opt.scale_by_singular_values = scale_singular;
            const LsaModel model = fit_lsa(x, d, g.seed, opt);
            write_embeddings_tsv(object_embeddings(model), out_objects);
            write_embeddings_tsv(scene_embeddings(model), out_scenes);
            ordered_json cfg = global_config(g);
            cfg["d"] = d;
            cfg["scale_by_singular_values"] = scale_singular;
            write_manifest(out_objects, "train-lsa", cfg, {matrix_path});
            write_manifest(out_scenes, "train-lsa", cfg, {matrix_path});
        } else if (tsg->parsed()) {
            const Corpus c = load_corpus_jsonl(corpus_path);
            const TrainConfig cfg =
                make_train_config(g, d, epochs, lr, sub_t, n_pos, n_neg, neg_exp, strict);
            TrainResult res = train_skipgram_scene(c, cfg);
            write_embeddings_tsv(res.input, out_scenes);
            write_embeddings_tsv(res.output, out_objects);
            if (!log_path.empty()) write_train_log_csv(res.log, log_path);
            ordered_json jcfg = global_config(g);
            jcfg["train"] = train_config_json(cfg);
            write_manifest(out_scenes, "train-skipgram", jcfg, {corpus_path});
            write_manifest(out_objects, "train-skipgram", jcfg, {corpus_path});
        } else if (tcb->parsed()) {
            const Corpus c = load_corpus_jsonl(corpus_path);
            const TrainConfig cfg =
                make_train_config(g, d, epochs, lr, sub_t, n_pos, n_neg, neg_exp, strict);
            TrainResult res = train_cbow(c, cfg);
            write_embeddings_tsv(res.input, out_objects);
            write_embeddings_tsv(res.output, out_scenes);
            if (!log_path.empty()) write_train_log_csv(res.log, log_path);
            ordered_json jcfg = global_config(g);
            jcfg["train"] = train_config_json(cfg);
            write_manifest(out_objects, "train-cbow", jcfg, {corpus_path});
            write_manifest(out_scenes, "train-cbow", jcfg, {corpus_path});
        } else if (pspat->parsed()) {
            const Corpus c = load_corpus_jsonl(corpus_path);
            const SpatialOptions opt =
                make_spatial_options(radius, distance, denominator, part_depth);
            // With SCENE_EMBED_CACHE set, a parse keyed on the corpus file and
            // options is reused; edits to the map files themselves require
            // clearing the cache directory.
            std::string cache_file;
            if (const char* cache_dir = std::getenv("SCENE_EMBED_CACHE")) {
                std::uint64_t key = fnv1a64_file(corpus_path);
                const std::string tag = distance + "|" + denominator + "|" +
                                        std::to_string(radius) + "|" +
                                        std::to_string(part_depth) + "|" + maps_dir;
                key ^= fnv1a64(tag.data(), tag.size());
                cache_file = std::string(cache_dir) + "/parse-" + hash_hex(key) + ".jsonl";
            }
            ParseStats stats;
            std::vector<SpatialContextGraph> graphs;
            bool from_cache = false;
            if (!cache_file.empty() && std::ifstream(cache_file).good()) {
                graphs = read_graphs_jsonl(cache_file, c);
                from_cache = true;
                for (const auto& gr2 : graphs) {
                    stats.total_instances += static_cast<std::int64_t>(gr2.n_nodes());
                    stats.max_instances_per_image = std::max(stats.max_instances_per_image,
                                                             static_cast<int>(gr2.n_nodes()));
                    for (const auto& e : gr2.edges) {
                        if (e.empty()) ++stats.empty_context;
                    }
                }
            } else {
                graphs = parse_corpus(c, maps_dir, opt, &stats, g.threads);
                if (!cache_file.empty()) write_graphs_jsonl(graphs, cache_file);
            }
            write_graphs_jsonl(graphs, out_path);
            for (const auto& f : stats.failures) std::cerr << "parse: " << f << "\n";
            std::cout << "graphs: " << graphs.size() << ", instances: " << stats.total_instances
                      << ", max per image: " << stats.max_instances_per_image
                      << ", empty contexts: " << stats.empty_context
                      << ", empty masks: " << stats.empty_masks
                      << ", failures: " << stats.failures.size()
                      << (from_cache ? " (cached)" : "") << "\n";
            ordered_json cfg = global_config(g);
            cfg["radius"] = radius;
            cfg["distance"] = distance;
            cfg["denominator"] = denominator;
            cfg["part_depth"] = part_depth;
            cfg["maps_dir"] = maps_dir;
            write_manifest(out_path, "parse-spatial", cfg, {corpus_path});
            if (!stats_path.empty()) {
                ordered_json js;
                js["graphs"] = graphs.size();
                js["total_instances"] = stats.total_instances;
                js["max_instances_per_image"] = stats.max_instances_per_image;
                js["empty_context"] = stats.empty_context;
                js["empty_masks"] = stats.empty_masks;
                js["images_without_map"] = stats.images_without_map;
                js["failures"] = stats.failures;
                write_json_out(js, stats_path);
            }
        } else if (tspat->parsed()) {
            const Corpus c = load_corpus_jsonl(corpus_path);
            const std::vector<SpatialContextGraph> graphs = read_graphs_jsonl(graphs_path, c);
            TrainConfig cfg =
                make_train_config(g, d, epochs, lr, sub_t, n_pos, n_neg, neg_exp, strict);
            SpatialTrainResult res = train_skipgram_spatial(graphs, c.objects, cfg);
            write_embeddings_tsv(res.embeddings, out_path);
            if (!log_path.empty()) write_train_log_csv(res.log, log_path);
            if (res.skipped_empty_context > 0) {
                std::cerr << "skipped " << res.skipped_empty_context
                          << " instances with empty context\n";
            }
            ordered_json jcfg = global_config(g);
            jcfg["train"] = train_config_json(cfg);
            write_manifest(out_path, "train-spatial", jcfg, {corpus_path, graphs_path});
        } else if (nb->parsed()) {
            const EmbeddingMatrix e = read_embeddings_tsv(emb_path);
            const std::vector<Neighbor> neighbors = nearest_neighbors(e, probe, k);
            std::string table;
            char buf[64];
            if (nb_format == "md") {
                table = "| neighbor | cosine distance |\n|---|---|\n";
                for (const auto& n : neighbors) {
                    std::snprintf(buf, sizeof(buf), "%.4f", n.distance);
                    table += "| " + n.token + " | " + buf + " |\n";
                }
            } else if (nb_format == "tsv") {
                for (const auto& n : neighbors) {
                    std::snprintf(buf, sizeof(buf), "%.10g", n.distance);
                    table += n.token + "\t" + buf + "\n";
                }
            } else {
                std::cerr << "unknown format '" << nb_format << "'\n";
                return 1;
            }
            if (out_path.empty()) {
                std::cout << table;
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw Error("cannot open " + out_path + " for writing");
                out << table;
                ordered_json cfg = global_config(g);
                cfg["probe"] = probe;
                cfg["k"] = k;
                cfg["format"] = nb_format;
                write_manifest(out_path, "neighbors", cfg, {emb_path});
            }
        } else if (rs->parsed()) {
            const EmbeddingMatrix e = read_embeddings_tsv(emb_path);
            const SupercategoryMap map = load_supercategories(supercats_path);
            RankSumWarnings warnings;
            const RankSumResult res = rank_sum_test(e, map, &warnings);
            ordered_json j;
            j["z"] = res.z;
            j["p"] = res.p_two_sided;
            j["n_within"] = res.n_within;
            j["n_between"] = res.n_between;
            j["mean_within"] = res.mean_within;
            j["mean_between"] = res.mean_between;
            j["unmapped_scenes"] = warnings.unmapped_scenes;
            j["small_supercategories"] = warnings.small_supercategories;
            std::cout << j.dump(2) << "\n";
            if (!out_path.empty()) {
                write_json_out(j, out_path);
                ordered_json cfg = global_config(g);
                cfg["supercats"] = supercats_path;
                write_manifest(out_path, "ranksum", cfg, {emb_path, supercats_path});
            }
        } else if (gr->parsed()) {
            const EmbeddingMatrix e = read_embeddings_tsv(emb_path);
            const ThresholdGraph tg = threshold_graph(e, threshold);
            write_threshold_graph_json(tg, out_path);
            std::cout << "nodes: " << tg.tokens.size() << ", edges: " << tg.edges.size()
                      << ", components: " << tg.n_components << "\n";
            ordered_json cfg = global_config(g);
            cfg["threshold"] = threshold;
            write_manifest(out_path, "graph", cfg, {emb_path});
        } else if (cls->parsed()) {
            const Corpus train = load_corpus_jsonl(train_path);
            const Corpus test = load_corpus_jsonl(test_path);
            const EmbeddingMatrix e = read_embeddings_tsv(emb_path);
            if (e.role != Role::object) {
                throw Error("classify needs object embeddings, got role=" + role_tag(e.role));
            }
            LsaModel model;
            model.d = e.d;
            model.object_tokens = e.tokens;
            model.O.resize(e.rows, e.d);
            for (int i = 0; i < e.rows; ++i) {
                for (int kk = 0; kk < e.d; ++kk) model.O(i, kk) = e.row(i)[kk];
            }
            ClassifyMethod cm;
            if (method == "nearest_centroid") {
                cm = ClassifyMethod::nearest_centroid;
            } else if (method == "logistic") {
                cm = ClassifyMethod::multinomial_logistic;
            } else {
                std::cerr << "unknown method '" << method << "'\n";
                return 1;
            }
            const ClassifyResult res = classify_scenes(train, test, model, cm, g.seed);
            ordered_json j;
            j["method"] = method;
            j["top1"] = res.top1;
            j["top5"] = res.top5;
            j["n_test"] = res.n_test;
            j["excluded"] = res.excluded;
            std::cout << j.dump(2) << "\n";
            if (!out_path.empty()) {
                write_json_out(j, out_path);
                ordered_json cfg = global_config(g);
                cfg["method"] = method;
                write_manifest(out_path, "classify", cfg, {train_path, test_path, emb_path});
            }
        } else if (ed->parsed()) {
            const EmbeddingMatrix e = read_embeddings_tsv(emb_path);
            export_distance_matrix(e, out_path, g.threads);
            write_manifest(out_path, "export-dist", global_config(g), {emb_path});
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
