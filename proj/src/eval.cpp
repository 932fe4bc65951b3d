#include "scene_embed/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "scene_embed/util.hpp"

namespace scene_embed {

double cosine_distance(const double* u, const double* v, int d) {
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (int k = 0; k < d; ++k) {
        uu += u[k] * u[k];
        vv += v[k] * v[k];
        uv += u[k] * v[k];
    }
    if (uu == 0.0 || vv == 0.0) throw Error("cosine_distance: zero vector");
    return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size() || u.empty()) throw Error("cosine_distance: dimension mismatch");
    return cosine_distance(u.data(), v.data(), static_cast<int>(u.size()));
}

namespace {

/// Rows scaled to unit norm; throws naming the token of any zero row.
std::vector<double> unit_rows(const EmbeddingMatrix& e) {
    std::vector<double> out(e.values.size());
    for (int i = 0; i < e.rows; ++i) {
        const double* r = e.row(i);
        double nn = 0.0;
        for (int k = 0; k < e.d; ++k) nn += r[k] * r[k];
        if (nn == 0.0) {
            throw Error("zero-norm embedding row for token '" +
                        e.tokens[static_cast<std::size_t>(i)] + "'");
        }
        const double inv = 1.0 / std::sqrt(nn);
        double* o = out.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(e.d);
        for (int k = 0; k < e.d; ++k) o[k] = r[k] * inv;
    }
    return out;
}

void fill_pairwise(const std::vector<double>& unit, int n, int d, std::vector<double>& out, int i) {
    const double* ui = unit.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d);
    out[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = 0.0;
    for (int j = i + 1; j < n; ++j) {
        const double* uj = unit.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(d);
        double uv = 0.0;
        for (int k = 0; k < d; ++k) uv += ui[k] * uj[k];
        const double dist = 1.0 - uv;
        out[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = dist;
        out[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = dist;
    }
}

}  // namespace

namespace serial {

std::vector<double> pairwise_cosine(const EmbeddingMatrix& e) {
    const std::vector<double> unit = unit_rows(e);
    std::vector<double> out(static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.rows));
    for (int i = 0; i < e.rows; ++i) fill_pairwise(unit, e.rows, e.d, out, i);
    return out;
}

}  // namespace serial

std::vector<double> pairwise_cosine(const EmbeddingMatrix& e, int threads) {
    const std::vector<double> unit = unit_rows(e);
    std::vector<double> out(static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.rows));
    const int nt = threads > 0 ? threads : omp_get_max_threads();
    // Cell (i,j) is written once, by the iteration owning min(i,j); per-cell
    // arithmetic is the same as the serial kernel, so results are bitwise equal.
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
    for (int i = 0; i < e.rows; ++i) fill_pairwise(unit, e.rows, e.d, out, i);
    return out;
}

void export_distance_matrix(const EmbeddingMatrix& e, const std::string& path, int threads) {
    const std::vector<double> dist = pairwise_cosine(e, threads);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (int j = 0; j < e.rows; ++j) out << "\t" << e.tokens[static_cast<std::size_t>(j)];
    out << "\n";
    char buf[64];
    for (int i = 0; i < e.rows; ++i) {
        out << e.tokens[static_cast<std::size_t>(i)];
        for (int j = 0; j < e.rows; ++j) {
            std::snprintf(buf, sizeof(buf), "%.10g",
                          dist[static_cast<std::size_t>(i) * static_cast<std::size_t>(e.rows) +
                               static_cast<std::size_t>(j)]);
            out << "\t" << buf;
        }
        out << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

namespace {

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& e, const std::string& probe, int k) {
    int probe_row = -1;
    for (int i = 0; i < e.rows; ++i) {
        if (e.tokens[static_cast<std::size_t>(i)] == probe) {
            probe_row = i;
            break;
        }
    }
    if (probe_row < 0) {
        std::vector<std::pair<int, std::string>> close;
        for (const auto& t : e.tokens) close.emplace_back(edit_distance(probe, t), t);
        std::sort(close.begin(), close.end());
        std::string hint;
        for (std::size_t i = 0; i < close.size() && i < 3; ++i) {
            hint += (i ? ", " : "") + close[i].second;
        }
        throw Error("unknown probe '" + probe + "' (closest tokens: " + hint + ")");
    }
    if (k < 1 || k >= e.rows) {
        throw Error("neighbor count k=" + std::to_string(k) + " out of range [1, " +
                    std::to_string(e.rows - 1) + "]");
    }
    std::vector<std::pair<double, int>> dists;
    dists.reserve(static_cast<std::size_t>(e.rows) - 1);
    for (int i = 0; i < e.rows; ++i) {
        if (i == probe_row) continue;
        dists.emplace_back(cosine_distance(e.row(probe_row), e.row(i), e.d), i);
    }
    std::sort(dists.begin(), dists.end());
    std::vector<Neighbor> out;
    for (int i = 0; i < k; ++i) {
        out.push_back({e.tokens[static_cast<std::size_t>(dists[static_cast<std::size_t>(i)].second)],
                       dists[static_cast<std::size_t>(i)].first});
    }
    return out;
}

SupercategoryMap load_supercategories(const std::string& path) {
    SupercategoryMap map;
    std::istringstream in(read_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        std::vector<std::string> cells = split(line, '\t');
        if (cells.size() != 2 || trim(cells[0]).empty() || trim(cells[1]).empty()) {
            throw Error(path + ":" + std::to_string(lineno) +
                        ": expected `scene<TAB>supercategory`");
        }
        map.by_scene[canonical_label(cells[0])] = canonical_label(cells[1]);
    }
    if (map.by_scene.empty()) throw Error(path + ": no entries");
    return map;
}

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw Error("wilcoxon_rank_sum: empty sample");
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    const std::size_t total = n + m;
    std::vector<std::pair<double, int>> pooled;  // (value, 0=a / 1=b)
    pooled.reserve(total);
    for (double v : a) pooled.emplace_back(v, 0);
    for (double v : b) pooled.emplace_back(v, 1);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });

    WilcoxonResult r;
    double tie_sum = 0.0;  // sum of t^3 - t over tie groups
    std::size_t i = 0;
    while (i < total) {
        std::size_t j = i;
        while (j < total && pooled[j].first == pooled[i].first) ++j;
        const double t = static_cast<double>(j - i);
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].second == 0) r.w += midrank;
        }
        tie_sum += t * t * t - t;
        i = j;
    }
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    const double dtotal = static_cast<double>(total);
    r.mu = dn * (dtotal + 1.0) / 2.0;
    const double correction = tie_sum / (dtotal * (dtotal - 1.0));
    const double var = dn * dm / 12.0 * ((dtotal + 1.0) - correction);
    r.sigma = var > 0.0 ? std::sqrt(var) : 0.0;
    if (r.sigma == 0.0) {
        r.z = 0.0;
        r.p_two_sided = 1.0;
        return r;
    }
    const double diff = r.w - r.mu;
    const double cc = diff > 0.0 ? -0.5 : (diff < 0.0 ? 0.5 : 0.0);
    r.z = (diff + cc) / r.sigma;
    r.p_two_sided = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    if (r.p_two_sided <= 0.0) r.p_two_sided = std::numeric_limits<double>::min();
    if (r.p_two_sided > 1.0) r.p_two_sided = 1.0;
    return r;
}

RankSumResult rank_sum_test(const EmbeddingMatrix& scenes, const SupercategoryMap& map,
                            RankSumWarnings* warnings) {
    RankSumWarnings local;
    std::map<std::string, std::vector<int>> groups;
    for (int i = 0; i < scenes.rows; ++i) {
        auto it = map.by_scene.find(scenes.tokens[static_cast<std::size_t>(i)]);
        if (it == map.by_scene.end()) {
            ++local.unmapped_scenes;
            continue;
        }
        groups[it->second].push_back(i);
    }
    std::vector<int> rows;
    std::vector<int> group_of(static_cast<std::size_t>(scenes.rows), -1);
    int gid = 0;
    for (const auto& [name, members] : groups) {
        (void)name;
        if (members.size() < 2) {
            ++local.small_supercategories;
            continue;
        }
        for (int i : members) {
            group_of[static_cast<std::size_t>(i)] = gid;
            rows.push_back(i);
        }
        ++gid;
    }
    if (warnings) *warnings = local;
    if (gid < 2) throw Error("rank_sum_test: need at least 2 supercategories with >= 2 scenes");

    std::vector<double> within, between;
    double sum_w = 0.0, sum_b = 0.0;
    for (std::size_t x = 0; x < rows.size(); ++x) {
        for (std::size_t y = x + 1; y < rows.size(); ++y) {
            const int i = rows[x];
            const int j = rows[y];
            const double dist = cosine_distance(scenes.row(i), scenes.row(j), scenes.d);
            if (group_of[static_cast<std::size_t>(i)] == group_of[static_cast<std::size_t>(j)]) {
                within.push_back(dist);
                sum_w += dist;
            } else {
                between.push_back(dist);
                sum_b += dist;
            }
        }
    }
    if (within.empty() || between.empty()) {
        throw Error("rank_sum_test: degenerate pair split");
    }
    const WilcoxonResult w = wilcoxon_rank_sum(within, between);
    RankSumResult r;
    r.z = w.z;
    r.p_two_sided = w.p_two_sided;
    r.n_within = static_cast<std::int64_t>(within.size());
    r.n_between = static_cast<std::int64_t>(between.size());
    r.mean_within = sum_w / static_cast<double>(within.size());
    r.mean_between = sum_b / static_cast<double>(between.size());
    return r;
}

ThresholdGraph threshold_graph(const EmbeddingMatrix& e, double threshold) {
    if (!(threshold > 0.0 && threshold < 2.0)) {
        throw Error("threshold_graph: threshold must lie in (0, 2)");
    }
    ThresholdGraph g;
    g.threshold = threshold;
    g.tokens = e.tokens;
    const std::vector<double> dist = pairwise_cosine(e);
    std::vector<int> parent(static_cast<std::size_t>(e.rows));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (int i = 0; i < e.rows; ++i) {
        for (int j = i + 1; j < e.rows; ++j) {
            if (dist[static_cast<std::size_t>(i) * static_cast<std::size_t>(e.rows) +
                     static_cast<std::size_t>(j)] < threshold) {
                g.edges.emplace_back(i, j);
                const int a = find(i);
                const int b = find(j);
                if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
            }
        }
    }
    g.component.assign(static_cast<std::size_t>(e.rows), -1);
    std::map<int, int> root_to_id;
    for (int i = 0; i < e.rows; ++i) {
        const int root = find(i);
        auto it = root_to_id.find(root);
        if (it == root_to_id.end()) {
            it = root_to_id.emplace(root, static_cast<int>(root_to_id.size())).first;
        }
        g.component[static_cast<std::size_t>(i)] = it->second;
    }
    g.n_components = static_cast<int>(root_to_id.size());
    return g;
}

void write_threshold_graph_json(const ThresholdGraph& g, const std::string& path) {
    nlohmann::ordered_json j;
    j["threshold"] = g.threshold;
    j["tokens"] = g.tokens;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({a, b});
    j["edges"] = std::move(edges);
    j["components"] = g.component;
    j["n_components"] = g.n_components;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("failed writing " + path);
}

namespace {

struct LabeledEmbedding {
    std::vector<double> e;
    int cls = -1;  // index into the train class list
};

std::vector<double> embed_image(const SceneImage& img, const Corpus& corpus,
                                const LsaModel& model,
                                const std::unordered_map<std::string, int>& model_row) {
    std::vector<double> e(static_cast<std::size_t>(model.d), 0.0);
    for (int o : img.distinct_objects()) {
        auto it = model_row.find(corpus.objects.text(o));
        if (it == model_row.end()) continue;  // object unseen by the model
        for (int k = 0; k < model.d; ++k) {
            e[static_cast<std::size_t>(k)] += model.O(it->second, k);
        }
    }
    return e;
}

double safe_cosine(const std::vector<double>& u, const std::vector<double>& v) {
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        uu += u[k] * u[k];
        vv += v[k] * v[k];
        uv += u[k] * v[k];
    }
    if (uu == 0.0 || vv == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

}  // namespace

ClassifyResult classify_scenes(const Corpus& train, const Corpus& test, const LsaModel& model,
                               ClassifyMethod method, std::uint64_t seed) {
    std::unordered_map<std::string, int> model_row;
    for (std::size_t i = 0; i < model.object_tokens.size(); ++i) {
        model_row.emplace(model.object_tokens[i], static_cast<int>(i));
    }
    // Train classes joined by label text so independently loaded corpora align.
    std::vector<std::string> classes;
    std::unordered_map<std::string, int> class_of;
    for (const auto& img : train.images) {
        const std::string& label = train.scenes.text(img.scene);
        if (class_of.emplace(label, static_cast<int>(classes.size())).second) {
            classes.push_back(label);
        }
    }
    if (classes.empty()) throw Error("classify_scenes: empty training corpus");
    const int n_classes = static_cast<int>(classes.size());
    const int d = model.d;

    std::vector<LabeledEmbedding> train_set;
    for (const auto& img : train.images) {
        LabeledEmbedding le;
        le.e = embed_image(img, train, model, model_row);
        le.cls = class_of.at(train.scenes.text(img.scene));
        train_set.push_back(std::move(le));
    }

    // Class scores per test image: nearest centroid ranks by cosine distance,
    // the logistic model by logits.
    std::vector<std::vector<double>> centroids;
    std::vector<double> weights;  // n_classes x (d + 1), bias last
    if (method == ClassifyMethod::nearest_centroid) {
        centroids.assign(static_cast<std::size_t>(n_classes),
                         std::vector<double>(static_cast<std::size_t>(d), 0.0));
        std::vector<std::int64_t> counts(static_cast<std::size_t>(n_classes), 0);
        for (const auto& le : train_set) {
            for (int k = 0; k < d; ++k) {
                centroids[static_cast<std::size_t>(le.cls)][static_cast<std::size_t>(k)] +=
                    le.e[static_cast<std::size_t>(k)];
            }
            ++counts[static_cast<std::size_t>(le.cls)];
        }
        for (int cls = 0; cls < n_classes; ++cls) {
            for (int k = 0; k < d; ++k) {
                centroids[static_cast<std::size_t>(cls)][static_cast<std::size_t>(k)] /=
                    static_cast<double>(counts[static_cast<std::size_t>(cls)]);
            }
        }
    } else {
        // Full-batch multinomial regression with Adam; zero init and full
        // batches make the fit deterministic, so the seed is unused.
        (void)seed;
        const double lr = 0.05;
        const int params = n_classes * (d + 1);
        weights.assign(static_cast<std::size_t>(params), 0.0);
        std::vector<double> m_state(static_cast<std::size_t>(params), 0.0);
        std::vector<double> v_state(static_cast<std::size_t>(params), 0.0);
        std::vector<double> grad(static_cast<std::size_t>(params));
        std::vector<double> logits(static_cast<std::size_t>(n_classes));
        const int epochs = 300;
        for (int epoch = 1; epoch <= epochs; ++epoch) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (const auto& le : train_set) {
                double max_logit = -std::numeric_limits<double>::infinity();
                for (int cls = 0; cls < n_classes; ++cls) {
                    const double* w = weights.data() + static_cast<std::size_t>(cls) *
                                                           static_cast<std::size_t>(d + 1);
                    double s = w[d];
                    for (int k = 0; k < d; ++k) s += w[k] * le.e[static_cast<std::size_t>(k)];
                    logits[static_cast<std::size_t>(cls)] = s;
                    max_logit = std::max(max_logit, s);
                }
                double z = 0.0;
                for (double& s : logits) {
                    s = std::exp(s - max_logit);
                    z += s;
                }
                for (int cls = 0; cls < n_classes; ++cls) {
                    const double coef = logits[static_cast<std::size_t>(cls)] / z -
                                        (cls == le.cls ? 1.0 : 0.0);
                    double* g = grad.data() + static_cast<std::size_t>(cls) *
                                                  static_cast<std::size_t>(d + 1);
                    for (int k = 0; k < d; ++k) g[k] += coef * le.e[static_cast<std::size_t>(k)];
                    g[d] += coef;
                }
            }
            const double scale = 1.0 / static_cast<double>(train_set.size());
            const double bc1 = 1.0 - std::pow(0.9, epoch);
            const double bc2 = 1.0 - std::pow(0.999, epoch);
            for (int p = 0; p < params; ++p) {
                const double g = grad[static_cast<std::size_t>(p)] * scale;
                m_state[static_cast<std::size_t>(p)] =
                    0.9 * m_state[static_cast<std::size_t>(p)] + 0.1 * g;
                v_state[static_cast<std::size_t>(p)] =
                    0.999 * v_state[static_cast<std::size_t>(p)] + 0.001 * g * g;
                weights[static_cast<std::size_t>(p)] -=
                    lr * (m_state[static_cast<std::size_t>(p)] / bc1) /
                    (std::sqrt(v_state[static_cast<std::size_t>(p)] / bc2) + 1e-8);
            }
        }
    }

    ClassifyResult r;
    const int top_k = std::min(5, n_classes);
    std::vector<std::pair<double, int>> ranked(static_cast<std::size_t>(n_classes));
    std::int64_t hits1 = 0, hits5 = 0;
    for (const auto& img : test.images) {
        auto cls_it = class_of.find(test.scenes.text(img.scene));
        if (cls_it == class_of.end()) {
            ++r.excluded;
            continue;
        }
        const std::vector<double> e = embed_image(img, test, model, model_row);
        for (int cls = 0; cls < n_classes; ++cls) {
            double score;
            if (method == ClassifyMethod::nearest_centroid) {
                score = safe_cosine(e, centroids[static_cast<std::size_t>(cls)]);
            } else {
                const double* w = weights.data() +
                                  static_cast<std::size_t>(cls) * static_cast<std::size_t>(d + 1);
                double s = w[d];
                for (int k = 0; k < d; ++k) s += w[k] * e[static_cast<std::size_t>(k)];
                score = -s;  // smaller is better, to share the ranking code
            }
            ranked[static_cast<std::size_t>(cls)] = {score, cls};
        }
        std::sort(ranked.begin(), ranked.end());
        ++r.n_test;
        if (ranked[0].second == cls_it->second) ++hits1;
        for (int t = 0; t < top_k; ++t) {
            if (ranked[static_cast<std::size_t>(t)].second == cls_it->second) {
                ++hits5;
                break;
            }
        }
    }
    if (r.n_test > 0) {
        r.top1 = static_cast<double>(hits1) / static_cast<double>(r.n_test);
        r.top5 = static_cast<double>(hits5) / static_cast<double>(r.n_test);
    }
    return r;
}

}  // namespace scene_embed
