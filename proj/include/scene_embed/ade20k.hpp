#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene_embed/corpus.hpp"

namespace scene_embed {

// ADE20K_2016_07_26 layout: per-image *_atr.txt attribute files, with the
// scene category given by the directory name. Attribute lines are
// `instance # part_level # occluded # labels # raw name # attributes`,
// where `labels` is a comma-separated synonym list (first synonym wins).

struct Ade20kInstance {
    int instance_number = 0;
    int part_level = 0;
    std::string label;  // canonical first synonym, "" if unlabeled
};

std::vector<Ade20kInstance> parse_ade20k_attr(const std::string& text, const std::string& origin);

/// Scans `root` recursively for *_atr.txt files and assembles an unfiltered
/// corpus. Objects and stuff are treated identically; parent relations are
/// resolved later from the segmentation PNGs (see convert_ade20k_segmaps).
Corpus load_corpus_ade20k(const std::string& root);

struct SegmapConversionStats {
    std::int64_t images_converted = 0;
    std::vector<std::string> failures;
};

/// Converts *_seg.png (and *_parts_N.png) files into SEGMAP v1 grids under
/// `out_dir`, re-numbers instances densely per image, resolves part parents
/// by majority pixel containment, and rewrites the corpus instance tables
/// and label_map paths accordingly.
SegmapConversionStats convert_ade20k_segmaps(const std::string& root, Corpus& c,
                                             const std::string& out_dir);

// Minimal PNG helpers (8-bit RGB or RGBA input; alpha ignored).
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height, row-major RGB
};

RgbImage read_png_rgb8(const std::string& path);
void write_png_rgb8(const RgbImage& img, const std::string& path);

}  // namespace scene_embed
