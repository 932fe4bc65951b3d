#include "scene_embed/lsa.hpp"

#include <algorithm>
#include <cmath>

#include "scene_embed/random.hpp"
#include "scene_embed/util.hpp"

namespace scene_embed {
namespace detail {

void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const double a = std::abs(u(i, k));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (u(best, k) < 0.0) {
            u.col(k) = -u.col(k);
            v.col(k) = -v.col(k);
        }
    }
}

Svd truncated_svd_dense(const Eigen::MatrixXd& a, int d) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Svd out;
    out.U = svd.matrixU().leftCols(d);
    out.S = svd.singularValues().head(d);
    out.V = svd.matrixV().leftCols(d);
    fix_signs(out.U, out.V);
    return out;
}

Svd truncated_svd_randomized(const Eigen::MatrixXd& a, int d, std::uint64_t seed,
                             int oversampling, int power_iterations) {
    const Eigen::Index n = a.rows();
    const Eigen::Index m = a.cols();
    const Eigen::Index r = std::min<Eigen::Index>(d + oversampling, std::min(n, m));

    Rng rng(derive_seed(seed, 0x15aULL));
    Eigen::MatrixXd omega(m, r);
    for (Eigen::Index j = 0; j < r; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) omega(i, j) = rng.gaussian();
    }

    auto orthonormalize = [](const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
        Eigen::MatrixXd q = Eigen::MatrixXd::Identity(y.rows(), y.cols());
        q = qr.householderQ() * q;
        return q;
    };

    Eigen::MatrixXd q = orthonormalize(a * omega);
    for (int t = 0; t < power_iterations; ++t) {
        q = orthonormalize(a.transpose() * q);
        q = orthonormalize(a * q);
    }

    const Eigen::MatrixXd b = q.transpose() * a;  // r x m
    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Svd out;
    out.U = q * svd.matrixU().leftCols(d);
    out.S = svd.singularValues().head(d);
    out.V = svd.matrixV().leftCols(d);
    fix_signs(out.U, out.V);
    return out;
}

}  // namespace detail

LsaModel fit_lsa(const CooccurrenceMatrix& x, int d, std::uint64_t seed, const LsaOptions& opt) {
    const int min_dim = std::min(x.n_rows, x.n_cols);
    if (d < 1 || d > min_dim) {
        throw Error("lsa rank d=" + std::to_string(d) + " out of range [1, " +
                    std::to_string(min_dim) + "]");
    }
    Eigen::MatrixXd a(x.n_rows, x.n_cols);
    for (int i = 0; i < x.n_rows; ++i) {
        for (int j = 0; j < x.n_cols; ++j) a(i, j) = x.at(i, j);
    }
    detail::Svd svd = min_dim <= opt.dense_cutoff
                          ? detail::truncated_svd_dense(a, d)
                          : detail::truncated_svd_randomized(a, d, seed, opt.oversampling,
                                                             opt.power_iterations);
    LsaModel model;
    model.O = std::move(svd.U);
    model.S = std::move(svd.V);
    model.singular_values = std::move(svd.S);
    model.d = d;
    model.source_norm = x.normalization;
    model.scale_by_singular_values = opt.scale_by_singular_values;
    model.object_tokens = x.row_labels;
    model.scene_tokens = x.col_labels;
    return model;
}

std::vector<double> embed_objects(const LsaModel& model, const std::vector<double>& counts) {
    if (static_cast<Eigen::Index>(counts.size()) != model.O.rows()) {
        throw Error("embed_objects: expected a length-" + std::to_string(model.O.rows()) +
                    " vector, got " + std::to_string(counts.size()));
    }
    const Eigen::Map<const Eigen::VectorXd> v(counts.data(),
                                              static_cast<Eigen::Index>(counts.size()));
    Eigen::VectorXd e = model.O.transpose() * v;
    return std::vector<double>(e.data(), e.data() + e.size());
}

namespace {

EmbeddingMatrix extract(const LsaModel& model, const Eigen::MatrixXd& mat,
                        const std::vector<std::string>& tokens, Role role) {
    EmbeddingMatrix e;
    e.rows = static_cast<int>(mat.rows());
    e.d = model.d;
    e.tokens = tokens;
    e.role = role;
    e.model = "lsa-" + normalization_tag(model.source_norm);
    e.values.resize(static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.d));
    for (int i = 0; i < e.rows; ++i) {
        for (int k = 0; k < e.d; ++k) {
            double v = mat(i, k);
            if (model.scale_by_singular_values) v *= model.singular_values(k);
            e.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(e.d) +
                     static_cast<std::size_t>(k)] = v;
        }
    }
    return e;
}

}  // namespace

EmbeddingMatrix object_embeddings(const LsaModel& model) {
    return extract(model, model.O, model.object_tokens, Role::object);
}

EmbeddingMatrix scene_embeddings(const LsaModel& model) {
    return extract(model, model.S, model.scene_tokens, Role::scene);
}

}  // namespace scene_embed
