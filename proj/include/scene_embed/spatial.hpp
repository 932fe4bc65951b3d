#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scene_embed/corpus.hpp"

namespace scene_embed {

/// Per-pixel instance grid plus instance->object and part-of tables.
/// Grid value 0 is background/unlabeled.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> grid;                 // row-major height*width
    std::unordered_map<int, int> instance_object;   // instance index -> object id
    std::unordered_map<int, int> parents;           // instance index -> parent instance

    std::int32_t at(int row, int col) const {
        return grid[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)];
    }
};

using Mask = std::vector<std::uint8_t>;  // row-major height*width, 0/1

/// Chebyshev dilation with a (2*radius+1)^2 square structuring element,
/// clipped at the image border. Separable two-pass implementation.
Mask dilate_mask(const Mask& mask, int width, int height, int radius = 3, int threads = 0);

namespace serial {
Mask dilate_mask(const Mask& mask, int width, int height, int radius = 3);
}

struct SpatialOptions {
    int radius = 3;
    enum class Distance { one_minus, reciprocal };
    enum class Denominator { ring, full };
    Distance distance = Distance::one_minus;     // 1 - overlap proportion (default)
    Denominator denominator = Denominator::ring; // dilated \ mask vs full dilated mask
    int part_depth = 0;                          // 0 = unlimited ancestor linking
};

constexpr double kPartDistance = 1e-10;

/// Sparse asymmetric distance graph over the instances of one image. Nodes
/// are stored in increasing instance-id order; edges are out-neighbors
/// sorted by target node.
struct SpatialContextGraph {
    std::string image_id;
    std::vector<int> instance_ids;  // node -> original instance id
    std::vector<int> node_object;   // node -> object id
    std::vector<std::vector<std::pair<int, double>>> edges;  // node -> (node, distance)

    std::size_t n_nodes() const { return instance_ids.size(); }
    std::int64_t n_edges() const;
};

struct BuildWarnings {
    int empty_masks = 0;
};

SpatialContextGraph build_context_graph(const LabelMap& map, const SpatialOptions& opt = {},
                                        BuildWarnings* warnings = nullptr);

// SEGMAP v1: text header "SEGMAP v1\n<width> <height>\n" followed by height
// lines of width space-separated non-negative instance indices.
void write_segmap(const std::vector<std::int32_t>& grid, int width, int height,
                  const std::string& path);
LabelMap read_segmap(const std::string& path);  // tables left empty

/// Fills the instance tables of `map` from a corpus record, validating that
/// every nonzero grid value has a table entry and that parents form a forest.
void attach_instances(LabelMap& map, const SceneImage& img);

struct ParseStats {
    std::int64_t total_instances = 0;
    int max_instances_per_image = 0;
    std::int64_t empty_context = 0;
    std::int64_t empty_masks = 0;
    std::int64_t images_without_map = 0;
    std::vector<std::string> failures;  // "image_id: reason"
};

/// Builds per-image context graphs for every image that carries a label map,
/// resolving relative paths against `base_dir`. Per-image failures are
/// recorded and parsing continues.
std::vector<SpatialContextGraph> parse_corpus(const Corpus& c, const std::string& base_dir,
                                              const SpatialOptions& opt = {},
                                              ParseStats* stats = nullptr, int threads = 0);

// Graph JSONL: {"image_id":...,"edges":[[i,j,dist],...]} with original
// instance ids and dist formatted %.3e.
void write_graphs_jsonl(const std::vector<SpatialContextGraph>& graphs, const std::string& path);

/// Reads graphs back, joining the corpus records to recover node objects.
std::vector<SpatialContextGraph> read_graphs_jsonl(const std::string& path, const Corpus& c);

}  // namespace scene_embed
