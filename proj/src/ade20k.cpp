#include "scene_embed/ade20k.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "scene_embed/spatial.hpp"
#include "scene_embed/util.hpp"

namespace fs = std::filesystem;

namespace scene_embed {

std::vector<Ade20kInstance> parse_ade20k_attr(const std::string& text, const std::string& origin) {
    std::vector<Ade20kInstance> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        std::vector<std::string> fields = split(line, '#');
        if (fields.size() < 4) {
            throw Error(where + ": expected at least 4 '#'-separated fields");
        }
        Ade20kInstance inst;
        try {
            inst.instance_number = std::stoi(trim(fields[0]));
            inst.part_level = std::stoi(trim(fields[1]));
        } catch (const std::exception&) {
            throw Error(where + ": non-numeric instance number or part level");
        }
        if (inst.instance_number <= 0 || inst.part_level < 0) {
            throw Error(where + ": instance number must be positive, part level non-negative");
        }
        const std::string labels = trim(fields[3]);
        const auto comma = labels.find(',');
        inst.label = canonical_label(comma == std::string::npos ? labels : labels.substr(0, comma));
        out.push_back(std::move(inst));
    }
    return out;
}

namespace {

std::vector<fs::path> find_attr_files(const std::string& root) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw Error("no such directory: " + root);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() > 8 && name.ends_with("_atr.txt")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no *_atr.txt files under " + root);
    return files;
}

std::string image_stem(const fs::path& attr_path) {
    std::string stem = attr_path.filename().string();
    stem.resize(stem.size() - 8);  // strip "_atr.txt"
    return stem;
}

}  // namespace

Corpus load_corpus_ade20k(const std::string& root) {
    Corpus c;
    std::set<std::string> seen;
    for (const auto& path : find_attr_files(root)) {
        const std::string stem = image_stem(path);
        const std::string scene = canonical_label(path.parent_path().filename().string());
        if (scene.empty()) continue;
        if (!seen.insert(stem).second) {
            throw Error("duplicate image id '" + stem + "' under " + root);
        }
        std::vector<Instance> instances;
        std::set<int> iids;
        for (const auto& a : parse_ade20k_attr(read_file(path.string()), path.string())) {
            if (!iids.insert(a.instance_number).second) {
                throw Error(path.string() + ": duplicate instance number " +
                            std::to_string(a.instance_number));
            }
            if (a.label.empty()) continue;
            Instance rec;
            rec.iid = a.instance_number;
            rec.object = c.objects.add(a.label);
            instances.push_back(rec);
        }
        if (instances.empty()) continue;
        SceneImage img;
        img.image_id = stem;
        img.scene = c.scenes.add(scene);
        img.instances = std::move(instances);
        c.images.push_back(std::move(img));
    }
    if (c.images.empty()) throw Error("no usable images under " + root);
    c.recount();
    return c;
}

namespace {

// One connected-by-color region of a segmentation PNG: all pixels sharing the
// same (blue, class) pair. Blue carries the per-level instance counter in the
// ADE20K encoding; class code is (R / 10) * 256 + G.
struct PngRegion {
    int cls = 0;
    std::string label;
    int raw_parent = -1;  // index into the flat region list, -1 for roots
    int dense_id = 0;     // 0 while unassigned (unlabeled regions stay 0)
    std::vector<std::size_t> pixels;
};

int class_code(const RgbImage& img, std::size_t p) {
    return (static_cast<int>(img.pixels[3 * p]) / 10) * 256 + static_cast<int>(img.pixels[3 * p + 1]);
}

std::map<std::pair<int, int>, std::vector<std::size_t>> collect_regions(const RgbImage& img) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> regions;  // (blue, class) -> pixels
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    for (std::size_t p = 0; p < n; ++p) {
        const int cls = class_code(img, p);
        if (cls == 0) continue;
        regions[{static_cast<int>(img.pixels[3 * p + 2]), cls}].push_back(p);
    }
    return regions;
}

}  // namespace

SegmapConversionStats convert_ade20k_segmaps(const std::string& root, Corpus& c,
                                             const std::string& out_dir) {
    std::unordered_map<std::string, fs::path> attr_by_stem;
    for (const auto& path : find_attr_files(root)) attr_by_stem.emplace(image_stem(path), path);
    fs::create_directories(out_dir);

    SegmapConversionStats stats;
    for (auto& img : c.images) {
        auto it = attr_by_stem.find(img.image_id);
        if (it == attr_by_stem.end()) {
            stats.failures.push_back(img.image_id + ": no attribute file under " + root);
            continue;
        }
        const fs::path attr_path = it->second;
        const fs::path dir = attr_path.parent_path();

        try {
            std::vector<std::vector<Ade20kInstance>> by_level;
            for (const auto& a : parse_ade20k_attr(read_file(attr_path.string()), attr_path.string())) {
                if (static_cast<std::size_t>(a.part_level) >= by_level.size()) {
                    by_level.resize(static_cast<std::size_t>(a.part_level) + 1);
                }
                by_level[static_cast<std::size_t>(a.part_level)].push_back(a);
            }

            int width = 0;
            int height = 0;
            std::vector<PngRegion> regions;                  // flat, level-major
            std::vector<std::vector<int>> level_grid;        // level -> region index + 1 per pixel
            std::vector<std::pair<int, int>> level_range;    // level -> [begin, end) in `regions`
            for (std::size_t level = 0; level < by_level.size(); ++level) {
                const auto& rows = by_level[level];
                if (rows.empty()) {
                    level_range.emplace_back(static_cast<int>(regions.size()),
                                             static_cast<int>(regions.size()));
                    level_grid.emplace_back();
                    continue;
                }
                const std::string png_name =
                    level == 0 ? img.image_id + "_seg.png"
                               : img.image_id + "_parts_" + std::to_string(level) + ".png";
                const RgbImage png = read_png_rgb8((dir / png_name).string());
                if (level == 0) {
                    width = png.width;
                    height = png.height;
                } else if (png.width != width || png.height != height) {
                    throw Error(png_name + ": size differs from the base segmentation");
                }
                auto found = collect_regions(png);
                if (found.size() != rows.size()) {
                    throw Error(png_name + ": " + std::to_string(found.size()) +
                                " mask regions vs " + std::to_string(rows.size()) +
                                " attribute rows at part level " + std::to_string(level));
                }
                const int begin = static_cast<int>(regions.size());
                std::vector<int> grid(static_cast<std::size_t>(width) *
                                          static_cast<std::size_t>(height),
                                      0);
                std::size_t row_idx = 0;
                for (auto& [key, pixels] : found) {
                    PngRegion r;
                    r.cls = key.second;
                    r.label = rows[row_idx++].label;
                    r.pixels = std::move(pixels);
                    for (std::size_t p : r.pixels) grid[p] = static_cast<int>(regions.size()) + 1;
                    regions.push_back(std::move(r));
                }
                level_range.emplace_back(begin, static_cast<int>(regions.size()));
                level_grid.push_back(std::move(grid));
            }

            // A part's parent is the instance at a shallower level covering the
            // plurality of its pixels, preferring the immediately shallower level.
            for (std::size_t level = 1; level < level_range.size(); ++level) {
                for (int ri = level_range[level].first; ri < level_range[level].second; ++ri) {
                    for (int cand = static_cast<int>(level) - 1; cand >= 0; --cand) {
                        if (level_grid[static_cast<std::size_t>(cand)].empty()) continue;
                        std::map<int, std::size_t> votes;
                        for (std::size_t p : regions[static_cast<std::size_t>(ri)].pixels) {
                            const int v = level_grid[static_cast<std::size_t>(cand)][p];
                            if (v > 0) ++votes[v - 1];
                        }
                        int best = -1;
                        std::size_t best_count = 0;
                        for (const auto& [idx, count] : votes) {
                            if (count > best_count) {
                                best = idx;
                                best_count = count;
                            }
                        }
                        if (best >= 0) {
                            regions[static_cast<std::size_t>(ri)].raw_parent = best;
                            break;
                        }
                    }
                }
            }

            int next_id = 0;
            for (auto& r : regions) {
                if (!r.label.empty()) r.dense_id = ++next_id;
            }
            if (next_id == 0) throw Error("no labeled instances in the segmentation");

            // Parts overwrite the pixels of their containers; unlabeled regions
            // are never drawn, so whatever sits below them shows through.
            std::vector<std::int32_t> grid(static_cast<std::size_t>(width) *
                                               static_cast<std::size_t>(height),
                                           0);
            for (const auto& r : regions) {
                if (r.dense_id == 0) continue;
                for (std::size_t p : r.pixels) grid[p] = r.dense_id;
            }

            const std::string map_name = img.image_id + ".segmap";
            write_segmap(grid, width, height, (fs::path(out_dir) / map_name).string());

            std::vector<Instance> instances;
            for (const auto& r : regions) {
                if (r.dense_id == 0) continue;
                Instance rec;
                rec.iid = r.dense_id;
                rec.object = c.objects.add(r.label);
                for (int a = r.raw_parent; a >= 0; a = regions[static_cast<std::size_t>(a)].raw_parent) {
                    if (regions[static_cast<std::size_t>(a)].dense_id > 0) {
                        rec.parent = regions[static_cast<std::size_t>(a)].dense_id;
                        break;
                    }
                }
                instances.push_back(rec);
            }
            img.instances = std::move(instances);
            img.label_map = map_name;
            ++stats.images_converted;
        } catch (const Error& e) {
            stats.failures.push_back(img.image_id + ": " + e.what());
        }
    }
    c.recount();
    return stats;
}

RgbImage read_png_rgb8(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw Error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw Error("libpng initialization failed");
    }
    RgbImage img;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw Error("failed to decode " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
        longjmp(png_jmpbuf(png), 1);
    }
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.pixels.resize(3u * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    row_ptrs.resize(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] =
            img.pixels.data() + 3u * static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width);
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

void write_png_rgb8(const RgbImage& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw Error("cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng initialization failed");
    }
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("failed to encode " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
            img.pixels.data() + 3u * static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width));
    }
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    return;
}

}  // namespace scene_embed
