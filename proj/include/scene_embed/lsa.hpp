#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "scene_embed/cooccur.hpp"
#include "scene_embed/embedding.hpp"

namespace scene_embed {

struct LsaOptions {
    int oversampling = 10;
    int power_iterations = 4;
    // At or below this min-dimension the exact dense decomposition is used;
    // the randomized range finder only kicks in for larger matrices.
    int dense_cutoff = 400;
    bool scale_by_singular_values = false;
};

/// Rank-d truncated SVD X ~ O diag(L) S^T of a (normalized) co-occurrence
/// matrix. Rows of O are object embeddings, rows of S scene embeddings.
struct LsaModel {
    Eigen::MatrixXd O;              // n x d, orthonormal columns
    Eigen::MatrixXd S;              // m x d, orthonormal columns
    Eigen::VectorXd singular_values;  // length d, non-increasing
    int d = 0;
    Normalization source_norm = Normalization::raw;
    bool scale_by_singular_values = false;
    std::vector<std::string> object_tokens;
    std::vector<std::string> scene_tokens;
};

LsaModel fit_lsa(const CooccurrenceMatrix& x, int d, std::uint64_t seed,
                 const LsaOptions& opt = {});

/// embed(x) = O^T x for a length-n object-presence vector.
std::vector<double> embed_objects(const LsaModel& model, const std::vector<double>& counts);

EmbeddingMatrix object_embeddings(const LsaModel& model);
EmbeddingMatrix scene_embeddings(const LsaModel& model);

namespace detail {

struct Svd {
    Eigen::MatrixXd U;
    Eigen::VectorXd S;
    Eigen::MatrixXd V;
};

/// Halko-style randomized range finder with subspace power iterations and
/// QR re-orthogonalization; deterministic for a fixed seed.
Svd truncated_svd_randomized(const Eigen::MatrixXd& a, int d, std::uint64_t seed,
                             int oversampling, int power_iterations);

Svd truncated_svd_dense(const Eigen::MatrixXd& a, int d);

/// Flips paired singular-vector signs so the largest-magnitude entry of each
/// left singular vector is positive (ties: lowest index wins).
void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v);

}  // namespace detail

}  // namespace scene_embed
