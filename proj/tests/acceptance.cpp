// Release gate: runs every acceptance criterion and prints exactly one
// [PASS]/[FAIL]/[SKIP] line per criterion. Exits nonzero if any criterion
// fails. Criterion 10 needs a local ADE20K tree and is skipped unless
// ADE20K_ROOT points at one.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "scene_embed/ade20k.hpp"
#include "scene_embed/cooccur.hpp"
#include "scene_embed/corpus.hpp"
#include "scene_embed/embedding.hpp"
#include "scene_embed/eval.hpp"
#include "scene_embed/lsa.hpp"
#include "scene_embed/random.hpp"
#include "scene_embed/spatial.hpp"
#include "scene_embed/util.hpp"
#include "scene_embed/w2v.hpp"

using namespace scene_embed;

namespace {

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

struct Outcome {
    bool ok = true;
    bool skipped = false;
    std::vector<std::string> notes;

    void fail(std::string why) {
        ok = false;
        notes.push_back(std::move(why));
    }
    void note(std::string what) { notes.push_back(std::move(what)); }
};

// --- 1. LSA reconstruction and truncation error -----------------------------

Outcome c1_lsa() {
    Outcome o;
    Rng rng(101);
    CooccurrenceMatrix x;
    x.n_rows = 20;
    x.n_cols = 10;
    x.values.resize(200);
    for (auto& v : x.values) v = rng.uniform();
    for (int i = 0; i < 20; ++i) x.row_labels.push_back(strf("o%d", i));
    for (int j = 0; j < 10; ++j) x.col_labels.push_back(strf("s%d", j));

    Eigen::MatrixXd xm(20, 10);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 10; ++j) xm(i, j) = x.at(i, j);

    const LsaModel full = fit_lsa(x, 10, 7);
    const Eigen::MatrixXd rec =
        full.O * full.singular_values.asDiagonal() * full.S.transpose();
    const double max_err = (xm - rec).cwiseAbs().maxCoeff();
    if (max_err >= 1e-8) o.fail(strf("full-rank reconstruction error %.3e >= 1e-8", max_err));

    const LsaModel rank4 = fit_lsa(x, 4, 7);
    const Eigen::MatrixXd rec4 =
        rank4.O * rank4.singular_values.asDiagonal() * rank4.S.transpose();
    const double frob = (xm - rec4).norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> ref(xm);
    double tail2 = 0.0;
    for (int k = 4; k < ref.singularValues().size(); ++k)
        tail2 += ref.singularValues()(k) * ref.singularValues()(k);
    const double tail = std::sqrt(tail2);
    const double rel = std::abs(frob - tail) / tail;
    if (rel > 1e-6) o.fail(strf("rank-4 Frobenius error off by %.3e relative", rel));
    if (o.ok) o.note(strf("reconstruction error %.2e, tail match %.2e relative", max_err, rel));
    return o;
}

// --- 2. tf-idf against the closed form --------------------------------------

Outcome c2_tfidf() {
    Outcome o;

    CooccurrenceMatrix w;
    w.n_rows = w.n_cols = 2;
    w.values = {2, 0, 2, 2};
    w.row_labels = {"bed", "wall"};
    w.col_labels = {"bedroom", "office"};
    const CooccurrenceMatrix t = normalize(w, Normalization::tfidf);
    if (!(t.at(0, 0) == 4.0 && t.at(0, 1) == 0.0 && t.at(1, 0) == 2.0 && t.at(1, 1) == 2.0)) {
        o.fail(strf("worked example gave [[%g,%g],[%g,%g]], want [[4,0],[2,2]]", t.at(0, 0),
                    t.at(0, 1), t.at(1, 0), t.at(1, 1)));
    }

    Rng rng(55);
    for (int trial = 0; trial < 20 && o.ok; ++trial) {
        CooccurrenceMatrix x;
        x.n_rows = 6;
        x.n_cols = 5;
        x.values.resize(30);
        for (auto& v : x.values) v = static_cast<double>(rng.below(4));
        for (int i = 0; i < 6; ++i) x.row_labels.push_back(strf("o%d", i));
        for (int j = 0; j < 5; ++j) x.col_labels.push_back(strf("s%d", j));
        const CooccurrenceMatrix got = normalize(x, Normalization::tfidf);
        for (int i = 0; i < 6; ++i) {
            int df = 0;
            for (int j = 0; j < 5; ++j) df += x.at(i, j) != 0.0;
            for (int j = 0; j < 5; ++j) {
                const double want = df == 0 ? 0.0 : x.at(i, j) * (5.0 / df);
                if (got.at(i, j) != want) {
                    o.fail(strf("trial %d entry (%d,%d): got %.17g want %.17g", trial, i, j,
                                got.at(i, j), want));
                }
            }
        }
    }
    if (o.ok) o.note("worked example and 20 random integer matrices match tf*(m/df) exactly");
    return o;
}

// --- 3. gradient checks -----------------------------------------------------

Outcome c3_gradients() {
    Outcome o;
    Rng rng(7);
    const int dims[3] = {3, 5, 8};
    int checked = 0;
    double worst = 0.0;

    auto rel_err = [](double a, double n) { return std::abs(a - n) / std::max(1.0, std::abs(n)); };
    auto check = [&](double analytic, double numeric, const char* what, int sample) {
        worst = std::max(worst, rel_err(analytic, numeric));
        ++checked;
        if (!testutil::grad_close(analytic, numeric)) {
            o.fail(strf("sample %d %s: analytic %.8g vs numeric %.8g", sample, what, analytic,
                        numeric));
        }
    };
    auto rand_vec = [&](int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& e : v) e = 0.8 * rng.gaussian();
        return v;
    };

    for (int s = 0; s < 100 && o.ok; ++s) {
        const int d = dims[s % 3];
        const std::vector<double> input = rand_vec(d);
        std::vector<std::vector<double>> pos, neg, cls;
        for (int j = 0; j < 3; ++j) pos.push_back(rand_vec(d));
        for (int j = 0; j < 4; ++j) neg.push_back(rand_vec(d));
        for (int j = 0; j < 6; ++j) cls.push_back(rand_vec(d));
        const int target = s % 6;

        const SgnsResult g = sgns_step(input, pos, neg);
        for (int k = 0; k < d; ++k) {
            const auto f = [&](const std::vector<double>& v) { return sgns_step(v, pos, neg).loss; };
            check(g.grad_input[static_cast<std::size_t>(k)], testutil::central_diff(f, input, k),
                  "sgns input", s);
        }
        for (std::size_t j = 0; j < pos.size(); ++j) {
            for (int k = 0; k < d; ++k) {
                const auto f = [&](const std::vector<double>& row) {
                    auto p = pos;
                    p[j] = row;
                    return sgns_step(input, p, neg).loss;
                };
                check(g.grad_positive[j][static_cast<std::size_t>(k)],
                      testutil::central_diff(f, pos[j], k), "sgns positive", s);
            }
        }
        for (std::size_t j = 0; j < neg.size(); ++j) {
            for (int k = 0; k < d; ++k) {
                const auto f = [&](const std::vector<double>& row) {
                    auto m = neg;
                    m[j] = row;
                    return sgns_step(input, pos, m).loss;
                };
                check(g.grad_negative[j][static_cast<std::size_t>(k)],
                      testutil::central_diff(f, neg[j], k), "sgns negative", s);
            }
        }

        const SoftmaxResult sm = softmax_xent_step(input, cls, target);
        for (int k = 0; k < d; ++k) {
            const auto f = [&](const std::vector<double>& v) {
                return softmax_xent_step(v, cls, target).loss;
            };
            check(sm.grad_input[static_cast<std::size_t>(k)], testutil::central_diff(f, input, k),
                  "softmax input", s);
        }
        for (std::size_t j = 0; j < cls.size(); ++j) {
            for (int k = 0; k < d; ++k) {
                const auto f = [&](const std::vector<double>& row) {
                    auto m = cls;
                    m[j] = row;
                    return softmax_xent_step(input, m, target).loss;
                };
                check(sm.grad_class_coeff[j] * input[static_cast<std::size_t>(k)],
                      testutil::central_diff(f, cls[j], k), "softmax class row", s);
            }
        }
    }
    if (o.ok) o.note(strf("%d partial derivatives within 1e-4 relative (worst %.2e)", checked, worst));
    return o;
}

// --- 4. sampling distributions ----------------------------------------------

Outcome c4_sampling() {
    Outcome o;
    Rng rng(11);
    const int draws = 1000000;
    const double t = 0.005;
    double worst = 0.0;

    for (const double f : {0.2, 0.02, 0.004}) {
        int kept = 0;
        for (int i = 0; i < draws; ++i) kept += subsample_keep(f, t, rng) ? 1 : 0;
        const double want = std::min(1.0, std::sqrt(t / f));
        const double dev = std::abs(static_cast<double>(kept) / draws - want);
        worst = std::max(worst, dev);
        if (dev >= 0.01) o.fail(strf("subsample keep rate at f=%.3f off by %.4f", f, dev));
    }

    const std::vector<std::int64_t> freqs = {1000, 400, 150, 60, 25, 10, 4, 1};
    const NegativeSampler sampler(freqs, 0.75);
    std::vector<int> counts(freqs.size(), 0);
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(sampler.draw(rng))];
    double total = 0.0;
    for (const auto f : freqs) total += std::pow(static_cast<double>(f), 0.75);
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double want = std::pow(static_cast<double>(freqs[i]), 0.75) / total;
        const double dev = std::abs(static_cast<double>(counts[i]) / draws - want);
        worst = std::max(worst, dev);
        if (dev >= 0.01) o.fail(strf("negative sampler token %zu off by %.4f", i, dev));
    }
    if (o.ok) o.note(strf("keep rates and unigram^0.75 frequencies within 1%% (worst %.5f)", worst));
    return o;
}

// --- 5. planted supercategory structure, all five models --------------------

Outcome c5_planted_structure() {
    Outcome o;
    double max_z = -1e300;

    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SyntheticSpec sp;
        sp.n_scenes = 20;
        sp.n_objects = 200;
        sp.images_per_scene = 50;
        sp.overlap = 0.2;
        sp.seed = seed;
        for (int i = 0; i < sp.n_scenes; ++i)
            sp.supercategory.push_back(i % 2 == 0 ? "indoor" : "outdoor");
        const Corpus c = generate_synthetic(sp);

        SupercategoryMap map;
        for (int i = 0; i < sp.n_scenes; ++i)
            map.by_scene[c.scenes.text(i)] = sp.supercategory[static_cast<std::size_t>(i)];

        const CooccurrenceMatrix raw = build_matrix(c);
        std::vector<std::pair<std::string, EmbeddingMatrix>> runs;
        for (const auto norm : {Normalization::norm, Normalization::log, Normalization::tfidf}) {
            const LsaModel m = fit_lsa(normalize(raw, norm), 10, derive_seed(seed, 5));
            runs.emplace_back("lsa-" + normalization_tag(norm), scene_embeddings(m));
        }

        TrainConfig cfg;
        cfg.d = 10;
        cfg.epochs = 30;
        cfg.learning_rate = 0.05;
        cfg.seed = seed;
        runs.emplace_back("skipgram", train_skipgram_scene(c, cfg).input);
        runs.emplace_back("cbow", train_cbow(c, cfg).output);

        for (const auto& [name, emb] : runs) {
            RankSumWarnings warn;
            const RankSumResult r = rank_sum_test(emb, map, &warn);
            if (!(r.z < -3.0) || !(r.mean_within < r.mean_between)) {
                o.fail(strf("seed %llu %s: z=%.2f mean_within=%.4f mean_between=%.4f",
                            static_cast<unsigned long long>(seed), name.c_str(), r.z,
                            r.mean_within, r.mean_between));
            }
            max_z = std::max(max_z, r.z);
        }
    }
    if (o.ok) o.note(strf("z < -3 and mean_within < mean_between everywhere (weakest z = %.2f)", max_z));
    return o;
}

// --- 6. spatial parser against pixel oracles --------------------------------

Outcome c6_spatial() {
    Outcome o;
    Rng rng(23);
    const SpatialOptions opt;
    int part_pairs = 0;
    std::int64_t edges = 0;

    for (int trial = 0; trial < 200 && o.ok; ++trial) {
        LabelMap map = testutil::random_label_map(32, 32, 6, 12, rng);
        const int n = static_cast<int>(map.instance_object.size());
        for (int iid = 2; iid <= n; ++iid) {
            if (rng.below(4) == 0)
                map.parents[iid] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(iid - 1)));
        }
        const auto px = testutil::pixels_by_instance(map);

        for (const auto& [iid, pixels] : px) {
            Mask m(32 * 32, 0);
            for (const auto& [x, y] : pixels) m[static_cast<std::size_t>(y) * 32 + x] = 1;
            if (dilate_mask(m, 32, 32, 3) != testutil::brute_dilate(m, 32, 32, 3)) {
                o.fail(strf("trial %d instance %d: dilation differs from pixel oracle", trial, iid));
            }
        }
        if (!o.ok) break;

        BuildWarnings warn;
        const SpatialContextGraph g = build_context_graph(map, opt, &warn);
        std::map<int, int> node_of;
        for (std::size_t i = 0; i < g.instance_ids.size(); ++i)
            node_of[g.instance_ids[i]] = static_cast<int>(i);
        if (node_of.size() != px.size()) {
            o.fail(strf("trial %d: %zu nodes for %zu non-empty instances", trial, node_of.size(),
                        px.size()));
            break;
        }

        std::set<std::pair<int, int>> part;
        for (const auto& [iid, pixels] : px) {
            int cur = iid;
            for (int guard = 0; guard < 64; ++guard) {
                const auto it = map.parents.find(cur);
                if (it == map.parents.end()) break;
                cur = it->second;
                if (px.count(cur)) {
                    part.insert({node_of.at(iid), node_of.at(cur)});
                    part.insert({node_of.at(cur), node_of.at(iid)});
                }
            }
        }
        part_pairs += static_cast<int>(part.size() / 2);

        for (const auto& [ida, a] : node_of) {
            for (const auto& [idb, b] : node_of) {
                if (a == b) continue;
                const bool expect = part.count({a, b}) != 0 ||
                                    testutil::chebyshev_adjacent(px.at(ida), px.at(idb), 3);
                double dist = -1.0;
                for (const auto& [to, dval] : g.edges[static_cast<std::size_t>(a)]) {
                    if (to == b) dist = dval;
                }
                if (expect != (dist >= 0.0)) {
                    o.fail(strf("trial %d: context membership for instances %d->%d is %s, oracle "
                                "says %s",
                                trial, ida, idb, dist >= 0.0 ? "present" : "absent",
                                expect ? "present" : "absent"));
                } else if (dist >= 0.0) {
                    ++edges;
                    if (part.count({a, b}) != 0 && dist != kPartDistance) {
                        o.fail(strf("trial %d: part pair %d->%d distance %.3e, want exactly 1e-10",
                                    trial, ida, idb, dist));
                    } else if (dist < kPartDistance || dist > 1.0) {
                        o.fail(strf("trial %d: distance %d->%d = %.3e outside [1e-10, 1]", trial,
                                    ida, idb, dist));
                    }
                }
            }
        }
    }
    if (o.ok)
        o.note(strf("200 maps, %lld directed edges and %d part pairs match the oracles",
                    static_cast<long long>(edges), part_pairs));
    return o;
}

// --- 7. wilcoxon normal approximation vs exact enumeration ------------------

Outcome c7_wilcoxon() {
    Outcome o;
    Rng rng(31);
    double worst = 0.0, worst_large = 0.0;
    int worst_n = 0, worst_m = 0, pairs_over = 0;
    bool sign_ok = true;

    for (int n = 1; n <= 8; ++n) {
        for (int m = 1; m <= 8; ++m) {
            double pair_worst = 0.0;
            for (int rep = 0; rep < 30; ++rep) {
                std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(m));
                for (auto& v : a) v = rng.uniform();
                for (auto& v : b) v = rng.uniform();
                const WilcoxonResult wr = wilcoxon_rank_sum(a, b);
                const testutil::ExactRankSum ex = testutil::exact_rank_sum(a, b);
                pair_worst = std::max(pair_worst, std::abs(wr.p_two_sided - ex.p_two_sided));
                if (wr.z * (wr.w - wr.mu) < 0.0) sign_ok = false;
            }
            if (pair_worst > worst) {
                worst = pair_worst;
                worst_n = n;
                worst_m = m;
            }
            if (std::min(n, m) >= 5) worst_large = std::max(worst_large, pair_worst);
            if (pair_worst > 0.02) ++pairs_over;
        }
    }

    if (!sign_ok) o.fail("z sign disagrees with the mean-rank ordering");
    if (pairs_over > 0) {
        o.fail(strf("normal-approximation p deviates from exact enumeration by up to %.4f at "
                    "(n=%d, m=%d); %d of 64 size pairs exceed the 0.02 bound",
                    worst, worst_n, worst_m, pairs_over));
        o.note(strf("restricted to min(n,m) >= 5 the worst deviation is %.4f; at the smallest "
                    "sizes the rank-sum null is too discrete for any continuous approximation "
                    "to track within 0.02",
                    worst_large));
        o.note("z-sign agreement holds for every draw; the implementation follows the tie-corrected "
               "continuity-corrected formula as specified");
    } else {
        o.note(strf("worst deviation %.4f across all 64 size pairs", worst));
    }
    return o;
}

// --- 8. planted adjacency becomes mutual nearest neighbors ------------------

Outcome c8_planted_spatial() {
    Outcome o;
    const char* pairs[3][2] = {{"towel", "towel rack"}, {"plate", "plate rack"}, {"mirror", "vanity"}};
    const char* noise[4] = {"crate", "barrel", "cone", "hydrant"};

    for (std::uint64_t seed = 1; seed <= 5 && o.ok; ++seed) {
        Vocab vocab;
        for (const auto& p : pairs) {
            vocab.add(p[0]);
            vocab.add(p[1]);
        }
        for (const char* nz : noise) vocab.add(nz);

        std::vector<SpatialContextGraph> graphs;
        for (int img = 0; img < 60; ++img) {
            LabelMap map;
            map.width = 48;
            map.height = 12;
            map.grid.assign(48 * 12, 0);
            const auto blob = [&](int iid, int x0) {
                for (int y = 4; y <= 6; ++y)
                    for (int x = x0; x <= x0 + 2; ++x)
                        map.grid[static_cast<std::size_t>(y) * 48 + x] = iid;
            };
            blob(1, 4);
            blob(2, 8);   // gap of one column, inside the radius-3 context
            blob(3, 30);  // isolated noise object
            map.instance_object[1] = *vocab.find(pairs[img % 3][0]);
            map.instance_object[2] = *vocab.find(pairs[img % 3][1]);
            map.instance_object[3] = *vocab.find(noise[img % 4]);
            graphs.push_back(build_context_graph(map));
        }

        TrainConfig cfg;
        cfg.d = 10;
        cfg.epochs = 30;
        cfg.learning_rate = 0.05;
        cfg.seed = seed;
        const SpatialTrainResult r = train_skipgram_spatial(graphs, vocab, cfg);

        for (const auto& p : pairs) {
            const auto fwd = nearest_neighbors(r.embeddings, p[0], 1);
            const auto back = nearest_neighbors(r.embeddings, p[1], 1);
            if (fwd[0].token != p[1] || back[0].token != p[0]) {
                o.fail(strf("seed %llu: %s <-> %s not mutual nearest neighbors (got %s / %s)",
                            static_cast<unsigned long long>(seed), p[0], p[1], fwd[0].token.c_str(),
                            back[0].token.c_str()));
            }
        }
    }
    if (o.ok) o.note("3 planted pairs are mutual nearest neighbors for all 5 seeds");
    return o;
}

// --- 9. classifier sanity and shuffled-label control ------------------------

Outcome c9_classifier() {
    Outcome o;
    SyntheticSpec sp;
    sp.n_scenes = 20;
    sp.n_objects = 200;
    sp.images_per_scene = 50;
    sp.overlap = 0.0;
    sp.seed = 17;
    for (int i = 0; i < sp.n_scenes; ++i) sp.supercategory.push_back(strf("pool_%02d", i));
    const Corpus full = generate_synthetic(sp);

    Corpus train = full, test = full;
    train.images.clear();
    test.images.clear();
    for (std::size_t i = 0; i < full.images.size(); ++i)
        (i % 5 == 0 ? test : train).images.push_back(full.images[i]);
    train.recount();
    test.recount();

    // one singular direction per disjoint scene pool, so d must cover all 20
    const LsaModel model = fit_lsa(normalize(build_matrix(train), Normalization::norm), 20, 3);
    const ClassifyResult r =
        classify_scenes(train, test, model, ClassifyMethod::nearest_centroid, 1);
    if (r.top1 < 0.95) o.fail(strf("top-1 %.3f < 0.95 on the overlap-0 corpus", r.top1));
    if (r.excluded != 0) o.fail(strf("%d test images excluded unexpectedly", r.excluded));

    Corpus shuffled = test;
    std::vector<int> labels;
    for (const auto& img : shuffled.images) labels.push_back(img.scene);
    Rng rng(99);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < shuffled.images.size(); ++i) shuffled.images[i].scene = labels[i];
    shuffled.recount();
    const ClassifyResult ctrl =
        classify_scenes(train, shuffled, model, ClassifyMethod::nearest_centroid, 1);

    const double chance = 1.0 / sp.n_scenes;
    const double sigma = std::sqrt(chance * (1.0 - chance) / ctrl.n_test);
    if (std::abs(ctrl.top1 - chance) > 3.0 * sigma) {
        o.fail(strf("shuffled-label top-1 %.4f outside chance %.3f +- %.4f", ctrl.top1, chance,
                    3.0 * sigma));
    }
    if (o.ok)
        o.note(strf("top-1 %.3f; shuffled control %.4f within chance %.3f +- %.4f", r.top1,
                    ctrl.top1, chance, 3.0 * sigma));
    return o;
}

// --- 10. ADE20K dataset reproduction (optional) -----------------------------

Outcome c10_ade20k() {
    Outcome o;
    const char* root = std::getenv("ADE20K_ROOT");
    if (root == nullptr) {
        o.skipped = true;
        o.note("set ADE20K_ROOT to a local ADE20K tree to run the dataset reproduction");
        return o;
    }

    Corpus c = load_corpus_ade20k(root);
    testutil::TmpDir maps;
    const SegmapConversionStats conv = convert_ade20k_segmaps(root, c, maps.path.string());
    c = filter_corpus(c);

    if (c.objects.size() != 1140) o.fail(strf("filtered vocabulary has %d objects, want 1140", c.objects.size()));
    if (c.images.size() != 19290)
        o.fail(strf("filtered corpus has %zu images, want 19290", c.images.size()));
    int argmax = 0;
    for (int i = 0; i < c.objects.size(); ++i) {
        if (c.object_image_freq[static_cast<std::size_t>(i)] >
            c.object_image_freq[static_cast<std::size_t>(argmax)])
            argmax = i;
    }
    if (c.objects.size() > 0 &&
        (c.objects.text(argmax) != "wall" || c.object_image_freq[static_cast<std::size_t>(argmax)] != 11559)) {
        o.fail(strf("most frequent object is '%s' at %lld, want 'wall' at 11559",
                    c.objects.text(argmax).c_str(),
                    static_cast<long long>(c.object_image_freq[static_cast<std::size_t>(argmax)])));
    }

    ParseStats st;
    parse_corpus(c, maps.path.string(), {}, &st, 0);
    if (st.total_instances != 604355)
        o.fail(strf("spatial parse found %lld instances, want 604355",
                    static_cast<long long>(st.total_instances)));
    if (st.max_instances_per_image != 345)
        o.fail(strf("max instances per image %d, want 345", st.max_instances_per_image));
    o.note(strf("converted %lld segmentations (%zu failures)",
                static_cast<long long>(conv.images_converted), conv.failures.size()));
    return o;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* label;
        double limit_s;  // <= 0 means no runtime bound
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "lsa reconstruction and truncation error", 1.0, c1_lsa},
        {2, "tf-idf matches the closed form exactly", 0.0, c2_tfidf},
        {3, "analytic gradients match finite differences", 10.0, c3_gradients},
        {4, "sampling distributions match closed forms", 30.0, c4_sampling},
        {5, "planted supercategory structure separates under all five models", 300.0,
         c5_planted_structure},
        {6, "spatial parser matches the pixel oracles", 30.0, c6_spatial},
        {7, "wilcoxon normal approximation tracks exact enumeration", 60.0, c7_wilcoxon},
        {8, "planted adjacent pairs become mutual nearest neighbors", 120.0, c8_planted_spatial},
        {9, "classifier sanity and shuffled-label control", 60.0, c9_classifier},
        {10, "ade20k dataset reproduction", 0.0, c10_ade20k},
    };

    int failures = 0;
    for (const auto& e : entries) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o.ok = false;
            o.notes.push_back(strf("unexpected exception: %s", ex.what()));
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.ok && !o.skipped && e.limit_s > 0.0 && secs >= e.limit_s) {
            o.ok = false;
            o.notes.push_back(strf("runtime %.1f s exceeds the %.0f s budget", secs, e.limit_s));
        }
        const char* status = o.skipped ? "SKIP" : o.ok ? "PASS" : "FAIL";
        std::printf("[%s] criterion %d: %s (%.1f s)\n", status, e.id, e.label, secs);
        for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
        if (!o.ok && !o.skipped) ++failures;
    }

    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures > 0 ? 1 : 0;
}
