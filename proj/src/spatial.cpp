#include "scene_embed/spatial.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "scene_embed/util.hpp"

namespace scene_embed {

std::int64_t SpatialContextGraph::n_edges() const {
    std::int64_t total = 0;
    for (const auto& e : edges) total += static_cast<std::int64_t>(e.size());
    return total;
}

namespace {

// Chebyshev dilation separates into a horizontal and a vertical sliding-max
// pass; both passes clip at the border.
void dilate_rows(const Mask& in, Mask& out, int width, int height, int radius, int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
        const std::uint8_t* row = in.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
        std::uint8_t* orow = out.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
        for (int x = 0; x < width; ++x) {
            std::uint8_t v = 0;
            const int lo = std::max(0, x - radius);
            const int hi = std::min(width - 1, x + radius);
            for (int xx = lo; xx <= hi && !v; ++xx) v = row[xx];
            orow[x] = v;
        }
    }
}

void dilate_cols(const Mask& in, Mask& out, int width, int height, int radius, int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
        const int lo = std::max(0, y - radius);
        const int hi = std::min(height - 1, y + radius);
        std::uint8_t* orow = out.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
        for (int x = 0; x < width; ++x) {
            std::uint8_t v = 0;
            for (int yy = lo; yy <= hi && !v; ++yy) {
                v = in[static_cast<std::size_t>(yy) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x)];
            }
            orow[x] = v;
        }
    }
}

void check_mask_args(const Mask& mask, int width, int height, int radius) {
    if (width < 0 || height < 0 ||
        mask.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error("dilate_mask: mask size does not match dimensions");
    }
    if (radius < 1) throw Error("dilate_mask: radius must be >= 1");
}

}  // namespace

namespace serial {

Mask dilate_mask(const Mask& mask, int width, int height, int radius) {
    check_mask_args(mask, width, height, radius);
    Mask tmp(mask.size()), out(mask.size());
    dilate_rows(mask, tmp, width, height, radius, 0, height);
    dilate_cols(tmp, out, width, height, radius, 0, height);
    return out;
}

}  // namespace serial

Mask dilate_mask(const Mask& mask, int width, int height, int radius, int threads) {
    check_mask_args(mask, width, height, radius);
    Mask tmp(mask.size()), out(mask.size());
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nt)
    {
        // Row blocks are disjoint and each output element depends only on the
        // input pass, so the result is identical to the serial kernel.
        const int w = omp_get_thread_num();
        const int n = omp_get_num_threads();
        const int b0 = height * w / n;
        const int b1 = height * (w + 1) / n;
        dilate_rows(mask, tmp, width, height, radius, b0, b1);
#pragma omp barrier
        dilate_cols(tmp, out, width, height, radius, b0, b1);
    }
    return out;
}

SpatialContextGraph build_context_graph(const LabelMap& map, const SpatialOptions& opt,
                                        BuildWarnings* warnings) {
    if (map.width < 0 || map.height < 0 ||
        map.grid.size() != static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height)) {
        throw Error("build_context_graph: grid size does not match dimensions");
    }
    if (opt.radius < 1) throw Error("build_context_graph: radius must be >= 1");
    if (opt.part_depth < 0) throw Error("build_context_graph: part_depth must be >= 0");

    // Pixels per instance id, in one grid pass.
    std::map<int, std::vector<std::size_t>> pixels;
    for (const auto& [iid, obj] : map.instance_object) {
        (void)obj;
        pixels[iid];
    }
    for (std::size_t p = 0; p < map.grid.size(); ++p) {
        const std::int32_t v = map.grid[p];
        if (v == 0) continue;
        auto it = pixels.find(static_cast<int>(v));
        if (it == pixels.end()) {
            throw Error("build_context_graph: grid value " + std::to_string(v) +
                        " has no instance table entry");
        }
        it->second.push_back(p);
    }

    SpatialContextGraph g;
    std::unordered_map<int, int> node_of;
    int empty = 0;
    for (const auto& [iid, pix] : pixels) {
        if (pix.empty()) {
            ++empty;
            continue;
        }
        node_of.emplace(iid, static_cast<int>(g.instance_ids.size()));
        g.instance_ids.push_back(iid);
        g.node_object.push_back(map.instance_object.at(iid));
    }
    if (warnings) warnings->empty_masks = empty;
    std::vector<std::map<int, double>> adj(g.n_nodes());

    const int radius = opt.radius;
    for (std::size_t node = 0; node < g.n_nodes(); ++node) {
        const auto& pix = pixels[g.instance_ids[node]];
        // Dilation cannot escape the mask's bounding box grown by the radius,
        // so all work happens in that window.
        int x0 = map.width, x1 = -1, y0 = map.height, y1 = -1;
        for (std::size_t p : pix) {
            const int x = static_cast<int>(p % static_cast<std::size_t>(map.width));
            const int y = static_cast<int>(p / static_cast<std::size_t>(map.width));
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
        x0 = std::max(0, x0 - radius);
        y0 = std::max(0, y0 - radius);
        x1 = std::min(map.width - 1, x1 + radius);
        y1 = std::min(map.height - 1, y1 + radius);
        const int ww = x1 - x0 + 1;
        const int wh = y1 - y0 + 1;
        Mask sub(static_cast<std::size_t>(ww) * static_cast<std::size_t>(wh), 0);
        for (std::size_t p : pix) {
            const int x = static_cast<int>(p % static_cast<std::size_t>(map.width));
            const int y = static_cast<int>(p / static_cast<std::size_t>(map.width));
            sub[static_cast<std::size_t>(y - y0) * static_cast<std::size_t>(ww) +
                static_cast<std::size_t>(x - x0)] = 1;
        }
        const Mask dil = serial::dilate_mask(sub, ww, wh, radius);
        std::int64_t ring_size = 0;
        std::map<int, std::int64_t> overlap;
        const int self = g.instance_ids[node];
        for (int y = 0; y < wh; ++y) {
            for (int x = 0; x < ww; ++x) {
                const std::size_t sp = static_cast<std::size_t>(y) * static_cast<std::size_t>(ww) +
                                       static_cast<std::size_t>(x);
                if (!dil[sp] || sub[sp]) continue;
                ++ring_size;
                const std::int32_t v =
                    map.grid[static_cast<std::size_t>(y + y0) * static_cast<std::size_t>(map.width) +
                             static_cast<std::size_t>(x + x0)];
                if (v != 0 && v != self) ++overlap[static_cast<int>(v)];
            }
        }
        const std::int64_t denom = opt.denominator == SpatialOptions::Denominator::ring
                                       ? ring_size
                                       : ring_size + static_cast<std::int64_t>(pix.size());
        for (const auto& [other, count] : overlap) {
            const double p = static_cast<double>(count) / static_cast<double>(denom);
            double dist = opt.distance == SpatialOptions::Distance::one_minus ? 1.0 - p : 1.0 / p;
            dist = std::clamp(dist, kPartDistance, 1.0);
            adj[node][node_of.at(other)] = dist;
        }
    }

    // Ancestor/descendant pairs override whatever the overlap produced. Hops
    // are counted in the original forest, skipping instances that did not
    // make it into the graph (empty masks).
    for (std::size_t node = 0; node < g.n_nodes(); ++node) {
        int cur = g.instance_ids[node];
        int hops = 0;
        std::size_t guard = 0;
        while (true) {
            auto it = map.parents.find(cur);
            if (it == map.parents.end()) break;
            if (++guard > map.instance_object.size() + 1) {
                throw Error("build_context_graph: parent cycle at instance " +
                            std::to_string(g.instance_ids[node]));
            }
            cur = it->second;
            ++hops;
            if (opt.part_depth > 0 && hops > opt.part_depth) break;
            auto anc = node_of.find(cur);
            if (anc == node_of.end()) continue;  // empty-mask ancestor, keep walking
            adj[node][anc->second] = kPartDistance;
            adj[static_cast<std::size_t>(anc->second)][static_cast<int>(node)] = kPartDistance;
        }
    }

    g.edges.resize(g.n_nodes());
    for (std::size_t node = 0; node < g.n_nodes(); ++node) {
        g.edges[node].assign(adj[node].begin(), adj[node].end());
    }
    return g;
}

void write_segmap(const std::vector<std::int32_t>& grid, int width, int height,
                  const std::string& path) {
    if (grid.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error("write_segmap: grid size does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "SEGMAP v1\n" << width << " " << height << "\n";
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (x) out << " ";
            out << grid[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(x)];
        }
        out << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

LabelMap read_segmap(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string header;
    if (!std::getline(in, header)) throw Error(path + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "SEGMAP v1") throw Error(path + ": not a SEGMAP v1 file");
    LabelMap map;
    if (!(in >> map.width >> map.height) || map.width <= 0 || map.height <= 0) {
        throw Error(path + ": bad dimension line");
    }
    map.grid.resize(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height));
    for (std::size_t p = 0; p < map.grid.size(); ++p) {
        long long v = 0;
        if (!(in >> v) || v < 0) {
            throw Error(path + ": bad or missing grid value at index " + std::to_string(p));
        }
        map.grid[p] = static_cast<std::int32_t>(v);
    }
    std::string rest;
    if (in >> rest) throw Error(path + ": trailing data after the grid");
    return map;
}

void attach_instances(LabelMap& map, const SceneImage& img) {
    map.instance_object.clear();
    map.parents.clear();
    for (const auto& inst : img.instances) {
        map.instance_object[inst.iid] = inst.object;
        if (inst.parent) map.parents[inst.iid] = *inst.parent;
    }
    bool had_nonzero = false;
    bool matched = false;
    for (auto& v : map.grid) {
        if (v == 0) continue;
        had_nonzero = true;
        if (map.instance_object.count(static_cast<int>(v))) {
            matched = true;
        } else {
            v = 0;  // filtered-out or unlabeled instance, treat as background
        }
    }
    if (had_nonzero && !matched && !img.instances.empty()) {
        throw Error("label map matches no instances of image '" + img.image_id + "'");
    }
}

std::vector<SpatialContextGraph> parse_corpus(const Corpus& c, const std::string& base_dir,
                                              const SpatialOptions& opt, ParseStats* stats,
                                              int threads) {
    std::vector<std::size_t> with_map;
    std::int64_t without = 0;
    for (std::size_t i = 0; i < c.images.size(); ++i) {
        if (c.images[i].label_map.empty()) {
            ++without;
        } else {
            with_map.push_back(i);
        }
    }
    if (with_map.empty()) throw Error("no label maps present");

    struct Slot {
        bool ok = false;
        SpatialContextGraph graph;
        std::string failure;
        int empty_masks = 0;
    };
    std::vector<Slot> slots(with_map.size());
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(nt)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(with_map.size()); ++k) {
        const auto& img = c.images[with_map[static_cast<std::size_t>(k)]];
        Slot& slot = slots[static_cast<std::size_t>(k)];
        try {
            std::string path = img.label_map;
            if (!base_dir.empty() && !path.empty() && path.front() != '/') {
                path = base_dir + "/" + path;
            }
            LabelMap map = read_segmap(path);
            attach_instances(map, img);
            BuildWarnings w;
            slot.graph = build_context_graph(map, opt, &w);
            slot.graph.image_id = img.image_id;
            slot.empty_masks = w.empty_masks;
            slot.ok = true;
        } catch (const Error& e) {
            slot.failure = img.image_id + ": " + e.what();
        }
    }

    std::vector<SpatialContextGraph> graphs;
    ParseStats local;
    local.images_without_map = without;
    for (auto& slot : slots) {
        if (!slot.ok) {
            local.failures.push_back(std::move(slot.failure));
            continue;
        }
        local.total_instances += static_cast<std::int64_t>(slot.graph.n_nodes());
        local.max_instances_per_image =
            std::max(local.max_instances_per_image, static_cast<int>(slot.graph.n_nodes()));
        for (const auto& e : slot.graph.edges) {
            if (e.empty()) ++local.empty_context;
        }
        local.empty_masks += slot.empty_masks;
        graphs.push_back(std::move(slot.graph));
    }
    if (stats) *stats = std::move(local);
    return graphs;
}

void write_graphs_jsonl(const std::vector<SpatialContextGraph>& graphs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    char buf[32];
    for (const auto& g : graphs) {
        out << "{\"image_id\":" << nlohmann::json(g.image_id).dump() << ",\"nodes\":[";
        for (std::size_t v = 0; v < g.n_nodes(); ++v) {
            if (v) out << ",";
            out << g.instance_ids[v];
        }
        out << "],\"edges\":[";
        bool first = true;
        for (std::size_t v = 0; v < g.n_nodes(); ++v) {
            for (const auto& [w, dist] : g.edges[v]) {
                if (!first) out << ",";
                first = false;
                std::snprintf(buf, sizeof(buf), "%.3e", dist);
                out << "[" << g.instance_ids[v] << "," << g.instance_ids[static_cast<std::size_t>(w)]
                    << "," << buf << "]";
            }
        }
        out << "]}\n";
    }
    if (!out) throw Error("failed writing " + path);
}

std::vector<SpatialContextGraph> read_graphs_jsonl(const std::string& path, const Corpus& c) {
    std::unordered_map<std::string, const SceneImage*> by_id;
    for (const auto& img : c.images) by_id.emplace(img.image_id, &img);

    std::vector<SpatialContextGraph> graphs;
    std::istringstream in(read_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("image_id") || !rec["image_id"].is_string() ||
            !rec.contains("edges") || !rec["edges"].is_array()) {
            throw Error(where + ": expected an object with image_id and edges");
        }
        SpatialContextGraph g;
        g.image_id = rec["image_id"].get<std::string>();
        auto img_it = by_id.find(g.image_id);
        if (img_it == by_id.end()) {
            throw Error(where + ": image '" + g.image_id + "' is not in the corpus");
        }
        std::unordered_map<int, int> object_of;
        for (const auto& inst : img_it->second->instances) object_of[inst.iid] = inst.object;

        std::vector<int> ids;
        if (rec.contains("nodes")) {
            if (!rec["nodes"].is_array()) throw Error(where + ": nodes must be an array");
            for (const auto& v : rec["nodes"]) {
                if (!v.is_number_integer()) throw Error(where + ": bad node id");
                ids.push_back(v.get<int>());
            }
        } else {
            for (const auto& e : rec["edges"]) {
                if (!e.is_array() || e.size() != 3) throw Error(where + ": bad edge triple");
                ids.push_back(e[0].get<int>());
                ids.push_back(e[1].get<int>());
            }
            std::sort(ids.begin(), ids.end());
            ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        }
        std::unordered_map<int, int> node_of;
        for (int iid : ids) {
            auto obj = object_of.find(iid);
            if (obj == object_of.end()) {
                throw Error(where + ": instance " + std::to_string(iid) +
                            " is not in image '" + g.image_id + "'");
            }
            node_of.emplace(iid, static_cast<int>(g.instance_ids.size()));
            g.instance_ids.push_back(iid);
            g.node_object.push_back(obj->second);
        }
        g.edges.resize(g.n_nodes());
        for (const auto& e : rec["edges"]) {
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
                !e[1].is_number_integer() || !e[2].is_number()) {
                throw Error(where + ": bad edge triple");
            }
            auto a = node_of.find(e[0].get<int>());
            auto b = node_of.find(e[1].get<int>());
            if (a == node_of.end() || b == node_of.end()) {
                throw Error(where + ": edge endpoint outside the node list");
            }
            const double dist = e[2].get<double>();
            if (!(dist >= 0.0 && dist <= 1.0)) throw Error(where + ": distance out of [0, 1]");
            g.edges[static_cast<std::size_t>(a->second)].emplace_back(b->second, dist);
        }
        for (auto& adj : g.edges) std::sort(adj.begin(), adj.end());
        graphs.push_back(std::move(g));
    }
    return graphs;
}

}  // namespace scene_embed
