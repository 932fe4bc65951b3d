#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scene_embed/corpus.hpp"
#include "scene_embed/embedding.hpp"
#include "scene_embed/random.hpp"
#include "scene_embed/spatial.hpp"

namespace scene_embed {

struct TrainConfig {
    int d = 100;
    int epochs = 100;
    double learning_rate = 0.01;
    double subsample_t = 0.005;
    int n_positive = 5;
    int n_negative = 20;
    double neg_exponent = 0.75;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    // Reject negatives that fall inside the true context (up to 10 redraws).
    // Unset means the per-trainer default: off for the scene Skipgram, on for
    // the spatial variant.
    std::optional<bool> strict_negatives;
    int threads = 1;  // > 1 shards Skipgram steps hogwild-style; 1 is deterministic
};

void validate(const TrainConfig& cfg);

/// Image-level subsampling: keep probability min(1, sqrt(t / f)) for a scene
/// of relative frequency f. Redrawn every epoch.
double subsample_keep_probability(double f, double t);
bool subsample_keep(double f, double t, Rng& rng);

/// Unigram sampler with p(o) proportional to f(o)^exponent, drawn by inverse
/// CDF binary search.
class NegativeSampler {
  public:
    NegativeSampler(const std::vector<std::int64_t>& frequencies, double exponent);
    int draw(Rng& rng) const;
    const std::vector<double>& probabilities() const { return probs_; }

  private:
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

struct SgnsResult {
    double loss = 0.0;
    std::vector<double> grad_input;                  // d
    std::vector<std::vector<double>> grad_positive;  // one per positive sample
    std::vector<std::vector<double>> grad_negative;  // one per negative sample
};

/// loss = -sum_pos log sigma(u.v) - sum_neg log sigma(-u.v), with exact
/// analytic gradients for every participating vector. Duplicated positives
/// each get their own gradient entry; callers accumulate.
SgnsResult sgns_step(const std::vector<double>& input,
                     const std::vector<std::vector<double>>& positives,
                     const std::vector<std::vector<double>>& negatives);

struct SoftmaxResult {
    double loss = 0.0;
    std::vector<double> probs;             // one per class, sums to 1
    std::vector<double> grad_input;        // d
    std::vector<double> grad_class_coeff;  // class row gradient = coeff[j] * input
};

/// Full softmax cross-entropy of `target` under scores class_rows * input.
SoftmaxResult softmax_xent_step(const std::vector<double>& input,
                                const std::vector<std::vector<double>>& class_rows, int target);

/// Adam with sparse row updates: bias correction runs on a per-row step
/// counter, untouched rows keep stale moments.
class AdamState {
  public:
    AdamState(int rows, int d, const TrainConfig& cfg);
    void apply(int row, double* weights, const double* grad);

  private:
    int d_;
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::vector<std::int64_t> steps_;
};

struct TrainLog {
    std::vector<double> mean_loss;
    std::vector<std::int64_t> images_kept;
};

// CSV with header `epoch,mean_loss,images_kept`, one row per epoch.
void write_train_log_csv(const TrainLog& log, const std::string& path);

struct TrainResult {
    EmbeddingMatrix input;
    EmbeddingMatrix output;
    TrainLog log;
};

/// Scene id in, image objects out: each kept image contributes one SGNS step
/// with n_positive objects drawn from the image (without replacement when
/// enough distinct objects exist, repeated otherwise) and n_negative draws
/// from the f(o)^0.75 sampler.
TrainResult train_skipgram_scene(const Corpus& c, const TrainConfig& cfg);

/// Summed 5-object context in, scene category out, full softmax over scene
/// categories. One epoch is |images| sampled steps.
TrainResult train_cbow(const Corpus& c, const TrainConfig& cfg);

struct SpatialTrainResult {
    EmbeddingMatrix embeddings;  // (input + output) / 2
    TrainLog log;
    std::int64_t skipped_empty_context = 0;
};

/// Instance-level Skipgram over spatial context graphs: positives are drawn
/// uniformly from the target's out-neighbors, negatives from instance counts
/// raised to neg_exponent. One epoch visits every instance once, shuffled.
SpatialTrainResult train_skipgram_spatial(const std::vector<SpatialContextGraph>& graphs,
                                          const Vocab& objects, const TrainConfig& cfg);

}  // namespace scene_embed
