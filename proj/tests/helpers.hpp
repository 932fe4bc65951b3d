#pragma once
// Shared fixtures and independent oracles. Everything here recomputes results
// from first principles (pixel scans, subset enumeration, finite differences)
// so the library implementations are never checked against themselves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scene_embed/corpus.hpp"
#include "scene_embed/random.hpp"
#include "scene_embed/spatial.hpp"

namespace testutil {

struct TmpDir {
    std::filesystem::path path;

    TmpDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "scene_embed_test_XXXXXX").string();
        char* got = mkdtemp(tmpl.data());
        if (!got) throw std::runtime_error("mkdtemp failed");
        path = got;
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TmpDir(const TmpDir&) = delete;
    TmpDir& operator=(const TmpDir&) = delete;

    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Three scenes, four objects, hand-countable frequencies.
inline scene_embed::Corpus tiny_corpus() {
    scene_embed::Corpus c;
    const int wall = c.objects.add("wall");
    const int bed = c.objects.add("bed");
    const int sink = c.objects.add("sink");
    const int tree = c.objects.add("tree");
    const int bedroom = c.scenes.add("bedroom");
    const int bathroom = c.scenes.add("bathroom");
    const int forest = c.scenes.add("forest");

    auto img = [](std::string id, int scene, std::vector<int> objs) {
        scene_embed::SceneImage im;
        im.image_id = std::move(id);
        im.scene = scene;
        int iid = 1;
        for (int o : objs) {
            scene_embed::Instance inst;
            inst.iid = iid++;
            inst.object = o;
            im.instances.push_back(inst);
        }
        return im;
    };
    c.images.push_back(img("b1", bedroom, {wall, bed, bed}));  // bed twice, counts once
    c.images.push_back(img("b2", bedroom, {wall, bed}));
    c.images.push_back(img("a1", bathroom, {wall, sink}));
    c.images.push_back(img("f1", forest, {tree}));
    c.images.push_back(img("f2", forest, {tree, wall}));
    c.recount();
    return c;
}

inline scene_embed::Corpus planted_corpus(int scenes, int objects, int images_per_scene,
                                          double overlap, std::uint64_t seed,
                                          int supercats = 2) {
    scene_embed::SyntheticSpec spec;
    spec.n_scenes = scenes;
    spec.n_objects = objects;
    spec.images_per_scene = images_per_scene;
    spec.overlap = overlap;
    spec.seed = seed;
    for (int s = 0; s < scenes; ++s) {
        spec.supercategory.push_back("supercat_" + std::to_string(s % supercats));
    }
    return scene_embed::generate_synthetic(spec);
}

// ---- pixel oracles ----

/// Direct (2r+1)^2 window scan, no separability tricks.
inline scene_embed::Mask brute_dilate(const scene_embed::Mask& mask, int width, int height,
                                      int radius) {
    scene_embed::Mask out(mask.size(), 0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            bool hit = false;
            for (int dy = -radius; dy <= radius && !hit; ++dy) {
                for (int dx = -radius; dx <= radius && !hit; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= height || xx < 0 || xx >= width) continue;
                    if (mask[static_cast<std::size_t>(yy) * width + xx]) hit = true;
                }
            }
            if (hit) out[static_cast<std::size_t>(y) * width + x] = 1;
        }
    }
    return out;
}

/// True iff some pixel pair of the two instances lies within Chebyshev
/// distance `radius`. Quadratic pixel-pair scan.
inline bool chebyshev_adjacent(const std::vector<std::pair<int, int>>& a,
                               const std::vector<std::pair<int, int>>& b, int radius) {
    for (const auto& [ax, ay] : a) {
        for (const auto& [bx, by] : b) {
            if (std::max(std::abs(ax - bx), std::abs(ay - by)) <= radius) return true;
        }
    }
    return false;
}

inline std::map<int, std::vector<std::pair<int, int>>> pixels_by_instance(
    const scene_embed::LabelMap& map) {
    std::map<int, std::vector<std::pair<int, int>>> px;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const std::int32_t v = map.at(y, x);
            if (v != 0) px[static_cast<int>(v)].emplace_back(x, y);
        }
    }
    return px;
}

// ---- statistics oracles ----

/// Exact two-sided permutation p of the rank-sum statistic: enumerate every
/// n-subset of the pooled values and count |W - mu| >= |w_obs - mu|.
/// Also reports the exact null mean and variance of W.
struct ExactRankSum {
    double w_obs = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double p_two_sided = 1.0;
};

inline ExactRankSum exact_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    const int total = n + m;
    if (total > 20) throw std::runtime_error("exact_rank_sum: too large");
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<int> order(pooled.size());
    for (int i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return pooled[static_cast<std::size_t>(x)] < pooled[static_cast<std::size_t>(y)]; });
    std::vector<double> rank(pooled.size(), 0.0);
    int i = 0;
    while (i < total) {
        int j = i;
        while (j < total &&
               pooled[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] ==
                   pooled[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]) {
            ++j;
        }
        const double midrank = (i + 1 + j) / 2.0;
        for (int k = i; k < j; ++k) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = midrank;
        i = j;
    }

    ExactRankSum r;
    for (int k = 0; k < n; ++k) r.w_obs += rank[static_cast<std::size_t>(k)];

    std::vector<double> sums;
    double s1 = 0.0, s2 = 0.0;
    for (std::uint32_t bits = 0; bits < (1u << total); ++bits) {
        if (__builtin_popcount(bits) != n) continue;
        double w = 0.0;
        for (int k = 0; k < total; ++k) {
            if (bits & (1u << k)) w += rank[static_cast<std::size_t>(k)];
        }
        sums.push_back(w);
        s1 += w;
        s2 += w * w;
    }
    const double count = static_cast<double>(sums.size());
    r.mean = s1 / count;
    r.variance = s2 / count - r.mean * r.mean;
    const double dev = std::abs(r.w_obs - r.mean);
    double hits = 0.0;
    for (double w : sums) {
        if (std::abs(w - r.mean) >= dev - 1e-9) hits += 1.0;
    }
    r.p_two_sided = hits / count;
    return r;
}

// ---- calculus oracle ----

/// Central difference d f / d x_i around x.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h = 1e-5) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    return (up - down) / (2.0 * h);
}

inline bool grad_close(double analytic, double numeric, double tol = 1e-4) {
    return std::abs(analytic - numeric) <= tol * std::max(1.0, std::abs(numeric));
}

// ---- co-occurrence oracle ----

/// values[i * n_scenes + j] = number of images of scene j containing object
/// i, straight from the definition.
inline std::vector<double> brute_cooccur(const scene_embed::Corpus& c) {
    const std::size_t n = static_cast<std::size_t>(c.objects.size());
    const std::size_t m = static_cast<std::size_t>(c.scenes.size());
    std::vector<double> values(n * m, 0.0);
    for (const auto& img : c.images) {
        std::set<int> seen;
        for (const auto& inst : img.instances) seen.insert(inst.object);
        for (int o : seen) {
            values[static_cast<std::size_t>(o) * m + static_cast<std::size_t>(img.scene)] += 1.0;
        }
    }
    return values;
}

// ---- label map fixtures ----

/// Random map with up to max_instances rectangular blobs; later blobs
/// overwrite earlier ones, so empty masks occur naturally.
inline scene_embed::LabelMap random_label_map(int width, int height, int max_instances,
                                              int n_objects, scene_embed::Rng& rng) {
    scene_embed::LabelMap map;
    map.width = width;
    map.height = height;
    map.grid.assign(static_cast<std::size_t>(width) * height, 0);
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_instances)));
    for (int iid = 1; iid <= n; ++iid) {
        const int w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(width / 2)));
        const int h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(height / 2)));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - w + 1)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - h + 1)));
        for (int y = y0; y < y0 + h; ++y) {
            for (int x = x0; x < x0 + w; ++x) {
                map.grid[static_cast<std::size_t>(y) * width + x] = iid;
            }
        }
        map.instance_object.emplace(iid, static_cast<int>(rng.below(static_cast<std::uint64_t>(n_objects))));
    }
    return map;
}

}  // namespace testutil
