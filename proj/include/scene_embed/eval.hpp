#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scene_embed/corpus.hpp"
#include "scene_embed/embedding.hpp"
#include "scene_embed/lsa.hpp"

namespace scene_embed {

/// 1 - u.v / (|u| |v|), in [0, 2]. Zero-norm input is an error.
double cosine_distance(const std::vector<double>& u, const std::vector<double>& v);
double cosine_distance(const double* u, const double* v, int d);

/// Full n x n cosine distance matrix, symmetric with a zero diagonal.
/// Zero-norm rows are an error naming the token.
std::vector<double> pairwise_cosine(const EmbeddingMatrix& e, int threads = 0);

namespace serial {
std::vector<double> pairwise_cosine(const EmbeddingMatrix& e);
}

// TSV with the same layout as the co-occurrence export: token header row,
// token first column, entries %.10g.
void export_distance_matrix(const EmbeddingMatrix& e, const std::string& path, int threads = 0);

struct Neighbor {
    std::string token;
    double distance = 0.0;
};

/// k nearest rows to the probe token by cosine distance, probe excluded,
/// ties broken by row order. Unknown probes raise an error suggesting the
/// closest token spellings.
std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& e, const std::string& probe, int k);

struct SupercategoryMap {
    std::unordered_map<std::string, std::string> by_scene;
};

// TSV `scene<TAB>supercategory`, '#' comment lines allowed.
SupercategoryMap load_supercategories(const std::string& path);

struct WilcoxonResult {
    double w = 0.0;      // rank sum of the first sample (midranks)
    double mu = 0.0;     // null mean n(N+1)/2
    double sigma = 0.0;  // tie-corrected null standard deviation
    double z = 0.0;      // continuity-corrected, negative when sample a ranks low
    double p_two_sided = 1.0;
};

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b);

struct RankSumResult {
    double z = 0.0;
    double p_two_sided = 1.0;
    std::int64_t n_within = 0;
    std::int64_t n_between = 0;
    double mean_within = 0.0;
    double mean_between = 0.0;
};

struct RankSumWarnings {
    int unmapped_scenes = 0;
    int small_supercategories = 0;  // groups with < 2 scenes, excluded
};

/// All unordered scene-pair cosine distances, split into within- and
/// between-supercategory samples; z is negative when within-pairs are closer.
RankSumResult rank_sum_test(const EmbeddingMatrix& scenes, const SupercategoryMap& map,
                            RankSumWarnings* warnings = nullptr);

struct ThresholdGraph {
    double threshold = 0.6;
    std::vector<std::string> tokens;
    std::vector<std::pair<int, int>> edges;  // i < j, distance < threshold
    std::vector<int> component;              // node -> component id
    int n_components = 0;
};

ThresholdGraph threshold_graph(const EmbeddingMatrix& e, double threshold = 0.6);

// JSON {"threshold":..., "tokens":[...], "edges":[[i,j],...], "components":[...]}.
void write_threshold_graph_json(const ThresholdGraph& g, const std::string& path);

enum class ClassifyMethod { nearest_centroid, multinomial_logistic };

struct ClassifyResult {
    double top1 = 0.0;
    double top5 = 0.0;  // Top-min(5, #classes) when fewer than 5 classes exist
    std::int64_t n_test = 0;
    std::int64_t excluded = 0;  // test images whose scene is absent from train
};

/// Embeds each image's binarized object-presence vector through the model
/// projection and classifies the test images against the train split.
/// Vocabularies are joined by token text, so independently loaded corpora
/// work as long as the labels match.
ClassifyResult classify_scenes(const Corpus& train, const Corpus& test, const LsaModel& model,
                               ClassifyMethod method, std::uint64_t seed = 0);

}  // namespace scene_embed
