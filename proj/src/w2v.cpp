#include "scene_embed/w2v.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "scene_embed/util.hpp"

namespace scene_embed {

void validate(const TrainConfig& cfg) {
    if (cfg.d < 1) throw Error("train config: d must be positive");
    if (cfg.epochs < 1) throw Error("train config: epochs must be positive");
    if (cfg.learning_rate <= 0.0) throw Error("train config: learning_rate must be positive");
    if (cfg.subsample_t < 0.0) throw Error("train config: subsample_t must be non-negative");
    if (cfg.n_positive < 1) throw Error("train config: n_positive must be positive");
    if (cfg.n_negative < 1) throw Error("train config: n_negative must be positive");
    if (cfg.neg_exponent < 0.0) throw Error("train config: neg_exponent must be non-negative");
    if (cfg.threads < 1) throw Error("train config: threads must be positive");
    if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 < 0.0 ||
        cfg.adam_beta2 >= 1.0 || cfg.adam_eps <= 0.0) {
        throw Error("train config: bad Adam parameters");
    }
}

double subsample_keep_probability(double f, double t) {
    if (f <= 0.0) return 1.0;
    return std::min(1.0, std::sqrt(t / f));
}

bool subsample_keep(double f, double t, Rng& rng) {
    return rng.uniform() < subsample_keep_probability(f, t);
}

NegativeSampler::NegativeSampler(const std::vector<std::int64_t>& frequencies, double exponent) {
    if (frequencies.empty()) throw Error("negative sampler: empty frequency table");
    probs_.resize(frequencies.size());
    double total = 0.0;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (frequencies[i] < 0) throw Error("negative sampler: negative frequency");
        probs_[i] = frequencies[i] > 0
                        ? std::pow(static_cast<double>(frequencies[i]), exponent)
                        : 0.0;
        total += probs_[i];
    }
    if (total <= 0.0) throw Error("negative sampler: all frequencies are zero");
    cdf_.resize(probs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        probs_[i] /= total;
        acc += probs_[i];
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
}

int NegativeSampler::draw(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    auto idx = static_cast<std::size_t>(it - cdf_.begin());
    if (idx >= probs_.size()) idx = probs_.size() - 1;
    while (probs_[idx] == 0.0 && idx + 1 < probs_.size()) ++idx;
    while (probs_[idx] == 0.0 && idx > 0) --idx;
    return static_cast<int>(idx);
}

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log sigma(x), computed without overflow on either tail.
double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double dot(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

SgnsResult sgns_step(const std::vector<double>& input,
                     const std::vector<std::vector<double>>& positives,
                     const std::vector<std::vector<double>>& negatives) {
    const int d = static_cast<int>(input.size());
    if (d == 0) throw Error("sgns_step: empty input vector");
    if (!all_finite(input)) throw Error("sgns_step: non-finite input");
    for (const auto& u : positives) {
        if (static_cast<int>(u.size()) != d || !all_finite(u)) {
            throw Error("sgns_step: bad positive vector");
        }
    }
    for (const auto& u : negatives) {
        if (static_cast<int>(u.size()) != d || !all_finite(u)) {
            throw Error("sgns_step: bad negative vector");
        }
    }
    SgnsResult r;
    r.grad_input.assign(static_cast<std::size_t>(d), 0.0);
    for (const auto& u : positives) {
        const double x = dot(u.data(), input.data(), d);
        r.loss -= log_sigmoid(x);
        const double coef = stable_sigmoid(x) - 1.0;
        std::vector<double> g(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            g[static_cast<std::size_t>(k)] = coef * input[static_cast<std::size_t>(k)];
            r.grad_input[static_cast<std::size_t>(k)] += coef * u[static_cast<std::size_t>(k)];
        }
        r.grad_positive.push_back(std::move(g));
    }
    for (const auto& u : negatives) {
        const double x = dot(u.data(), input.data(), d);
        r.loss -= log_sigmoid(-x);
        const double coef = stable_sigmoid(x);
        std::vector<double> g(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            g[static_cast<std::size_t>(k)] = coef * input[static_cast<std::size_t>(k)];
            r.grad_input[static_cast<std::size_t>(k)] += coef * u[static_cast<std::size_t>(k)];
        }
        r.grad_negative.push_back(std::move(g));
    }
    return r;
}

SoftmaxResult softmax_xent_step(const std::vector<double>& input,
                                const std::vector<std::vector<double>>& class_rows, int target) {
    const int d = static_cast<int>(input.size());
    const int m = static_cast<int>(class_rows.size());
    if (d == 0 || m == 0) throw Error("softmax_xent_step: empty input");
    if (target < 0 || target >= m) throw Error("softmax_xent_step: target out of range");
    SoftmaxResult r;
    std::vector<double> scores(static_cast<std::size_t>(m));
    double max_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
        if (static_cast<int>(class_rows[static_cast<std::size_t>(j)].size()) != d) {
            throw Error("softmax_xent_step: row dimension mismatch");
        }
        scores[static_cast<std::size_t>(j)] =
            dot(class_rows[static_cast<std::size_t>(j)].data(), input.data(), d);
        max_score = std::max(max_score, scores[static_cast<std::size_t>(j)]);
    }
    double z = 0.0;
    r.probs.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        r.probs[static_cast<std::size_t>(j)] = std::exp(scores[static_cast<std::size_t>(j)] - max_score);
        z += r.probs[static_cast<std::size_t>(j)];
    }
    for (double& p : r.probs) p /= z;
    r.loss = -(scores[static_cast<std::size_t>(target)] - max_score - std::log(z));
    r.grad_input.assign(static_cast<std::size_t>(d), 0.0);
    r.grad_class_coeff = r.probs;
    r.grad_class_coeff[static_cast<std::size_t>(target)] -= 1.0;
    for (int j = 0; j < m; ++j) {
        const double coef = r.grad_class_coeff[static_cast<std::size_t>(j)];
        const auto& u = class_rows[static_cast<std::size_t>(j)];
        for (int k = 0; k < d; ++k) {
            r.grad_input[static_cast<std::size_t>(k)] += coef * u[static_cast<std::size_t>(k)];
        }
    }
    return r;
}

AdamState::AdamState(int rows, int d, const TrainConfig& cfg)
    : d_(d),
      lr_(cfg.learning_rate),
      beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      eps_(cfg.adam_eps),
      m_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(d), 0.0),
      v_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(d), 0.0),
      steps_(static_cast<std::size_t>(rows), 0) {}

void AdamState::apply(int row, double* weights, const double* grad) {
    const std::int64_t t = ++steps_[static_cast<std::size_t>(row)];
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
    double* m = m_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(d_);
    double* v = v_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(d_);
    for (int k = 0; k < d_; ++k) {
        m[k] = beta1_ * m[k] + (1.0 - beta1_) * grad[k];
        v[k] = beta2_ * v[k] + (1.0 - beta2_) * grad[k] * grad[k];
        weights[k] -= lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps_);
    }
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "epoch,mean_loss,images_kept\n";
    char buf[64];
    for (std::size_t e = 0; e < log.mean_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.10g,%lld", e + 1, log.mean_loss[e],
                      static_cast<long long>(log.images_kept[e]));
        out << buf << "\n";
    }
    if (!out) throw Error("failed writing " + path);
}

namespace {

EmbeddingMatrix init_matrix(int rows, int d, Role role, const std::string& model,
                            std::vector<std::string> tokens, std::uint64_t seed,
                            std::uint64_t stream) {
    EmbeddingMatrix e;
    e.rows = rows;
    e.d = d;
    e.role = role;
    e.model = model;
    e.tokens = std::move(tokens);
    e.values.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(d));
    Rng rng(derive_seed(seed, stream));
    for (double& v : e.values) v = (rng.uniform() - 0.5) / d;
    return e;
}

void check_finite(const EmbeddingMatrix& e, int epoch) {
    if (!all_finite(e.values)) {
        throw Error("training diverged: non-finite " + e.model + " entries after epoch " +
                    std::to_string(epoch + 1));
    }
}

/// k draws from `pool`: a uniform sample without replacement when the pool is
/// large enough, otherwise uniform with repetition.
void sample_context(const std::vector<int>& pool, int k, Rng& rng, std::vector<int>& out,
                    std::vector<int>& scratch) {
    out.clear();
    if (static_cast<int>(pool.size()) >= k) {
        scratch = pool;
        for (int i = 0; i < k; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) + rng.below(scratch.size() - static_cast<std::size_t>(i));
            std::swap(scratch[static_cast<std::size_t>(i)], scratch[j]);
            out.push_back(scratch[static_cast<std::size_t>(i)]);
        }
    } else {
        for (int i = 0; i < k; ++i) {
            out.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
        }
    }
}

/// `exclude` must be sorted. Strict mode redraws collisions up to 10 times,
/// then accepts whatever came last.
void draw_negatives(const NegativeSampler& sampler, Rng& rng, int k, bool strict,
                    const std::vector<int>& exclude, std::vector<int>& out) {
    out.clear();
    for (int i = 0; i < k; ++i) {
        int id = sampler.draw(rng);
        if (strict) {
            int attempts = 0;
            while (attempts < 10 && std::binary_search(exclude.begin(), exclude.end(), id)) {
                id = sampler.draw(rng);
                ++attempts;
            }
        }
        out.push_back(id);
    }
}

struct SgnsScratch {
    std::vector<int> touched;
    std::vector<double> out_grads;
    std::vector<double> g_in;
};

double sgns_apply(EmbeddingMatrix& in, int in_row, AdamState& in_adam, EmbeddingMatrix& out,
                  AdamState& out_adam, const std::vector<int>& pos, const std::vector<int>& neg,
                  SgnsScratch& s) {
    const int d = in.d;
    double* v = in.row(in_row);
    s.touched.clear();
    auto slot = [&s](int id) -> std::size_t {
        for (std::size_t i = 0; i < s.touched.size(); ++i) {
            if (s.touched[i] == id) return i;
        }
        s.touched.push_back(id);
        return s.touched.size() - 1;
    };
    for (int id : pos) slot(id);
    for (int id : neg) slot(id);
    s.out_grads.assign(s.touched.size() * static_cast<std::size_t>(d), 0.0);
    s.g_in.assign(static_cast<std::size_t>(d), 0.0);
    double loss = 0.0;
    auto accumulate = [&](int id, double coef) {
        const double* u = out.row(id);
        double* g = s.out_grads.data() + slot(id) * static_cast<std::size_t>(d);
        for (int k = 0; k < d; ++k) {
            g[k] += coef * v[k];
            s.g_in[static_cast<std::size_t>(k)] += coef * u[k];
        }
    };
    for (int id : pos) {
        const double x = dot(out.row(id), v, d);
        loss -= log_sigmoid(x);
        accumulate(id, stable_sigmoid(x) - 1.0);
    }
    for (int id : neg) {
        const double x = dot(out.row(id), v, d);
        loss -= log_sigmoid(-x);
        accumulate(id, stable_sigmoid(x));
    }
    in_adam.apply(in_row, v, s.g_in.data());
    for (std::size_t i = 0; i < s.touched.size(); ++i) {
        out_adam.apply(s.touched[i], out.row(s.touched[i]),
                       s.out_grads.data() + i * static_cast<std::size_t>(d));
    }
    return loss;
}

}  // namespace

TrainResult train_skipgram_scene(const Corpus& c, const TrainConfig& cfg) {
    validate(cfg);
    if (c.images.empty()) throw Error("train_skipgram_scene: empty corpus");
    const int n = c.objects.size();
    const int m = c.scenes.size();
    TrainResult r;
    r.input = init_matrix(m, cfg.d, Role::scene, "skipgram", c.scenes.texts(), cfg.seed, 1);
    r.output = init_matrix(n, cfg.d, Role::object, "skipgram", c.objects.texts(), cfg.seed, 2);
    AdamState in_adam(m, cfg.d, cfg);
    AdamState out_adam(n, cfg.d, cfg);
    const NegativeSampler sampler(c.object_image_freq, cfg.neg_exponent);
    const bool strict = cfg.strict_negatives.value_or(false);
    const double total = static_cast<double>(c.images.size());

    std::vector<std::vector<int>> distinct(c.images.size());
    for (std::size_t i = 0; i < c.images.size(); ++i) distinct[i] = c.images[i].distinct_objects();
    std::vector<double> keep_p(static_cast<std::size_t>(m));
    for (int s = 0; s < m; ++s) {
        keep_p[static_cast<std::size_t>(s)] = subsample_keep_probability(
            static_cast<double>(c.scene_image_freq[static_cast<std::size_t>(s)]) / total,
            cfg.subsample_t);
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, 0x100ULL + static_cast<std::uint64_t>(epoch)));
        std::vector<int> order(c.images.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::vector<int> kept;
        for (int i : order) {
            if (rng.uniform() < keep_p[static_cast<std::size_t>(c.images[static_cast<std::size_t>(i)].scene)]) {
                kept.push_back(i);
            }
        }
        double loss_sum = 0.0;
        auto process = [&](std::size_t begin, std::size_t end, Rng& wrng) {
            SgnsScratch scratch;
            std::vector<int> pos, neg, tmp;
            double local = 0.0;
            for (std::size_t idx = begin; idx < end; ++idx) {
                const int i = kept[idx];
                const auto& pool = distinct[static_cast<std::size_t>(i)];
                sample_context(pool, cfg.n_positive, wrng, pos, tmp);
                draw_negatives(sampler, wrng, cfg.n_negative, strict, pool, neg);
                local += sgns_apply(r.input, c.images[static_cast<std::size_t>(i)].scene, in_adam,
                                    r.output, out_adam, pos, neg, scratch);
            }
            return local;
        };
        if (cfg.threads == 1) {
            loss_sum = process(0, kept.size(), rng);
        } else {
#pragma omp parallel num_threads(cfg.threads) reduction(+ : loss_sum)
            {
                const int w = omp_get_thread_num();
                const int nw = omp_get_num_threads();
                Rng wrng(derive_seed(cfg.seed,
                                     0x10000ULL + static_cast<std::uint64_t>(epoch) *
                                                      static_cast<std::uint64_t>(nw) +
                                         static_cast<std::uint64_t>(w)));
                const std::size_t b = kept.size() * static_cast<std::size_t>(w) /
                                      static_cast<std::size_t>(nw);
                const std::size_t e = kept.size() * static_cast<std::size_t>(w + 1) /
                                      static_cast<std::size_t>(nw);
                loss_sum += process(b, e, wrng);
            }
        }
        r.log.mean_loss.push_back(kept.empty() ? 0.0 : loss_sum / static_cast<double>(kept.size()));
        r.log.images_kept.push_back(static_cast<std::int64_t>(kept.size()));
        check_finite(r.input, epoch);
        check_finite(r.output, epoch);
    }
    return r;
}

TrainResult train_cbow(const Corpus& c, const TrainConfig& cfg) {
    validate(cfg);
    if (c.images.empty()) throw Error("train_cbow: empty corpus");
    const int n = c.objects.size();
    const int m = c.scenes.size();
    const int d = cfg.d;
    TrainResult r;
    r.input = init_matrix(n, d, Role::object, "cbow", c.objects.texts(), cfg.seed, 1);
    r.output = init_matrix(m, d, Role::scene, "cbow", c.scenes.texts(), cfg.seed, 2);
    AdamState in_adam(n, d, cfg);
    AdamState out_adam(m, d, cfg);

    std::vector<std::vector<int>> images_by_object(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> distinct(c.images.size());
    for (std::size_t i = 0; i < c.images.size(); ++i) {
        distinct[i] = c.images[i].distinct_objects();
        for (int o : distinct[i]) images_by_object[static_cast<std::size_t>(o)].push_back(static_cast<int>(i));
    }

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor> scene_rows(r.output.values.data(), m, d);

    const std::int64_t steps_per_epoch = static_cast<std::int64_t>(c.images.size());
    std::vector<int> context, pool, tmp, scratch;
    std::vector<double> h(static_cast<std::size_t>(d));
    std::vector<double> g_row(static_cast<std::size_t>(d));
    Eigen::VectorXd scores(m), probs(m), g_h(d);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, 0x200ULL + static_cast<std::uint64_t>(epoch)));
        double loss_sum = 0.0;
        for (std::int64_t step = 0; step < steps_per_epoch; ++step) {
            int o = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            while (images_by_object[static_cast<std::size_t>(o)].empty()) {
                o = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            }
            const auto& imgs = images_by_object[static_cast<std::size_t>(o)];
            const int img = imgs[static_cast<std::size_t>(rng.below(imgs.size()))];
            pool.clear();
            for (int other : distinct[static_cast<std::size_t>(img)]) {
                if (other != o) pool.push_back(other);
            }
            context.clear();
            context.push_back(o);
            const int need = cfg.n_positive - 1;
            if (pool.empty()) {
                context.insert(context.end(), static_cast<std::size_t>(need), o);
            } else {
                sample_context(pool, need, rng, tmp, scratch);
                context.insert(context.end(), tmp.begin(), tmp.end());
            }
            std::fill(h.begin(), h.end(), 0.0);
            for (int id : context) {
                const double* row = r.input.row(id);
                for (int k = 0; k < d; ++k) h[static_cast<std::size_t>(k)] += row[k];
            }
            const Eigen::Map<const Eigen::VectorXd> hv(h.data(), d);
            scores.noalias() = scene_rows * hv;
            const double max_score = scores.maxCoeff();
            probs = (scores.array() - max_score).exp();
            const double z = probs.sum();
            probs /= z;
            const int target = c.images[static_cast<std::size_t>(img)].scene;
            loss_sum += -(scores(target) - max_score - std::log(z));
            probs(target) -= 1.0;  // now the per-class gradient coefficients
            g_h.noalias() = scene_rows.transpose() * probs;
            // scene rows first: their gradient uses h, which does not change
            // until the input rows are updated afterwards
            for (int j = 0; j < m; ++j) {
                const double coef = probs(j);
                for (int k = 0; k < d; ++k) g_row[static_cast<std::size_t>(k)] = coef * h[static_cast<std::size_t>(k)];
                out_adam.apply(j, r.output.row(j), g_row.data());
            }
            std::sort(context.begin(), context.end());
            for (std::size_t a = 0; a < context.size();) {
                std::size_t b = a;
                while (b < context.size() && context[b] == context[a]) ++b;
                const double mult = static_cast<double>(b - a);
                for (int k = 0; k < d; ++k) g_row[static_cast<std::size_t>(k)] = mult * g_h(k);
                in_adam.apply(context[a], r.input.row(context[a]), g_row.data());
                a = b;
            }
        }
        r.log.mean_loss.push_back(loss_sum / static_cast<double>(steps_per_epoch));
        r.log.images_kept.push_back(steps_per_epoch);
        check_finite(r.input, epoch);
        check_finite(r.output, epoch);
    }
    return r;
}

SpatialTrainResult train_skipgram_spatial(const std::vector<SpatialContextGraph>& graphs,
                                          const Vocab& objects, const TrainConfig& cfg) {
    validate(cfg);
    if (graphs.empty()) throw Error("train_skipgram_spatial: no graphs");
    const int n = objects.size();
    std::vector<std::int64_t> freq(static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, int>> nodes;  // (graph, node)
    std::int64_t skipped = 0;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        for (std::size_t v = 0; v < graphs[g].n_nodes(); ++v) {
            const int obj = graphs[g].node_object[v];
            if (obj < 0 || obj >= n) {
                throw Error("train_skipgram_spatial: node object id " + std::to_string(obj) +
                            " outside the vocabulary in image '" + graphs[g].image_id + "'");
            }
            ++freq[static_cast<std::size_t>(obj)];
            if (graphs[g].edges[v].empty()) {
                ++skipped;
            } else {
                nodes.emplace_back(static_cast<int>(g), static_cast<int>(v));
            }
        }
    }
    if (nodes.empty()) throw Error("train_skipgram_spatial: every instance has an empty context");
    const NegativeSampler sampler(freq, cfg.neg_exponent);
    const bool strict = cfg.strict_negatives.value_or(true);

    EmbeddingMatrix input =
        init_matrix(n, cfg.d, Role::object, "skipgram-spatial", objects.texts(), cfg.seed, 1);
    EmbeddingMatrix output =
        init_matrix(n, cfg.d, Role::object, "skipgram-spatial", objects.texts(), cfg.seed, 2);
    AdamState in_adam(n, cfg.d, cfg);
    AdamState out_adam(n, cfg.d, cfg);

    SpatialTrainResult r;
    r.skipped_empty_context = skipped;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, 0x300ULL + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(nodes);
        double loss_sum = 0.0;
        auto process = [&](std::size_t begin, std::size_t end, Rng& wrng) {
            SgnsScratch scratch;
            std::vector<int> ctx_objects, pos, neg, tmp, exclude;
            double local = 0.0;
            for (std::size_t idx = begin; idx < end; ++idx) {
                const auto& graph = graphs[static_cast<std::size_t>(nodes[idx].first)];
                const int v = nodes[idx].second;
                const int target = graph.node_object[static_cast<std::size_t>(v)];
                ctx_objects.clear();
                for (const auto& [w, dist] : graph.edges[static_cast<std::size_t>(v)]) {
                    (void)dist;
                    ctx_objects.push_back(graph.node_object[static_cast<std::size_t>(w)]);
                }
                sample_context(ctx_objects, cfg.n_positive, wrng, pos, tmp);
                if (strict) {
                    exclude = ctx_objects;
                    exclude.push_back(target);
                    std::sort(exclude.begin(), exclude.end());
                    exclude.erase(std::unique(exclude.begin(), exclude.end()), exclude.end());
                }
                draw_negatives(sampler, wrng, cfg.n_negative, strict, exclude, neg);
                local += sgns_apply(input, target, in_adam, output, out_adam, pos, neg, scratch);
            }
            return local;
        };
        if (cfg.threads == 1) {
            loss_sum = process(0, nodes.size(), rng);
        } else {
#pragma omp parallel num_threads(cfg.threads) reduction(+ : loss_sum)
            {
                const int w = omp_get_thread_num();
                const int nw = omp_get_num_threads();
                Rng wrng(derive_seed(cfg.seed,
                                     0x20000ULL + static_cast<std::uint64_t>(epoch) *
                                                      static_cast<std::uint64_t>(nw) +
                                         static_cast<std::uint64_t>(w)));
                const std::size_t b = nodes.size() * static_cast<std::size_t>(w) /
                                      static_cast<std::size_t>(nw);
                const std::size_t e = nodes.size() * static_cast<std::size_t>(w + 1) /
                                      static_cast<std::size_t>(nw);
                loss_sum += process(b, e, wrng);
            }
        }
        r.log.mean_loss.push_back(loss_sum / static_cast<double>(nodes.size()));
        r.log.images_kept.push_back(static_cast<std::int64_t>(nodes.size()));
        check_finite(input, epoch);
        check_finite(output, epoch);
    }

    r.embeddings = std::move(input);
    for (std::size_t i = 0; i < r.embeddings.values.size(); ++i) {
        r.embeddings.values[i] = 0.5 * (r.embeddings.values[i] + output.values[i]);
    }
    return r;
}

}  // namespace scene_embed
