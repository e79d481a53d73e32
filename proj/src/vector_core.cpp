#include "negadapt/vector_core.hpp"

#include <cmath>

#include "negadapt/error.hpp"

namespace negadapt {

namespace {

constexpr double kClampSlack = 1e-12;
constexpr double kSimplexTolerance = 1e-9;

void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dimension " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

double clamp_similarity(double value) {
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::NonFiniteInput, "similarity is not finite");
    }
    if (value > 1.0 || value < -1.0) {
        if (std::fabs(value) - 1.0 > kClampSlack) {
            throw Error(ErrorCode::NumericalError,
                        "cosine overshoots [-1, 1] beyond tolerance");
        }
        return value > 0.0 ? 1.0 : -1.0;
    }
    return value;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::string id, std::vector<double> values, std::string model_tag,
                                 bool normalized)
    : id_(std::move(id)), values_(std::move(values)), model_tag_(std::move(model_tag)),
      normalized_(normalized) {
    if (values_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "embedding '" + id_ + "' has no dimensions");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFiniteInput, "embedding '" + id_ + "' has a non-finite value");
        }
    }
    if (norm(values_) == 0.0) {
        throw Error(ErrorCode::ZeroVector, "embedding '" + id_ + "' is the zero vector");
    }
}

EmbeddingVector EmbeddingVector::unit() const {
    const double n = norm(values_);
    std::vector<double> out(values_.size());
    for (std::size_t k = 0; k < values_.size(); ++k) {
        out[k] = values_[k] / n;
    }
    return EmbeddingVector(id_, std::move(out), model_tag_, true);
}

double ContributionVector::sum() const noexcept {
    double total = 0.0;
    for (double v : values) {
        total += v;
    }
    return total;
}

WeightVector::WeightVector(std::vector<double> weights, double a, WeightSource source)
    : weights_(std::move(weights)), a_(a), source_(std::move(source)) {
    if (weights_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "weight vector has no dimensions");
    }
    if (!std::isfinite(a_) || a_ < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "hyperparameter a must be finite and >= 0");
    }
    double total = 0.0;
    uniform_ = true;
    for (double w : weights_) {
        if (!std::isfinite(w) || w <= 0.0) {
            throw Error(ErrorCode::InvalidArgument, "weights must be finite and strictly positive");
        }
        total += w;
        uniform_ = uniform_ && w == weights_.front();
    }
    if (std::fabs(total - 1.0) > kSimplexTolerance) {
        throw Error(ErrorCode::InvalidArgument, "weights do not sum to 1");
    }
}

WeightVector WeightVector::uniform(std::size_t dim) {
    if (dim == 0) {
        throw Error(ErrorCode::InvalidArgument, "weight vector has no dimensions");
    }
    return WeightVector(std::vector<double>(dim, 1.0 / static_cast<double>(dim)), 0.0);
}

double dot(std::span<const double> x, std::span<const double> y) {
    require_same_dim(x.size(), y.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        acc += x[k] * y[k];
    }
    return acc;
}

double norm(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

double cosine(const EmbeddingVector& x, const EmbeddingVector& y) {
    require_same_dim(x.dim(), y.dim());
    return clamp_similarity(dot(x.values(), y.values()) / (norm(x.values()) * norm(y.values())));
}

ContributionVector cosine_decompose(const EmbeddingVector& x, const EmbeddingVector& y) {
    require_same_dim(x.dim(), y.dim());
    const double denom = norm(x.values()) * norm(y.values());
    ContributionVector out;
    out.values.resize(x.dim());
    for (std::size_t k = 0; k < x.dim(); ++k) {
        out.values[k] = x[k] * y[k] / denom;
    }
    return out;
}

ContributionVector triplet_contribution(const EmbeddingVector& t, const EmbeddingVector& p,
                                        const EmbeddingVector& n) {
    require_same_dim(t.dim(), p.dim());
    require_same_dim(t.dim(), n.dim());
    ContributionVector out = cosine_decompose(t, p);
    const ContributionVector neg = cosine_decompose(t, n);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        out.values[k] -= neg.values[k];
    }
    out.n_triplets = 1;
    return out;
}

EmbeddingVector apply_weights(const EmbeddingVector& x, const WeightVector& w) {
    require_same_dim(x.dim(), w.dim());
    std::vector<double> out(x.dim());
    for (std::size_t k = 0; k < x.dim(); ++k) {
        out[k] = w[k] * x[k];
    }
    return EmbeddingVector(x.id(), std::move(out), x.model_tag(), false);
}

double weighted_cosine(const EmbeddingVector& x, const EmbeddingVector& y, const WeightVector& w) {
    require_same_dim(x.dim(), y.dim());
    require_same_dim(x.dim(), w.dim());
    // A common positive factor cancels exactly in the ratio.
    if (w.is_uniform()) {
        return cosine(x, y);
    }
    // Same products and accumulation order as cosine(apply_weights(x), apply_weights(y)),
    // without materializing the scaled copies.
    double xy = 0.0;
    double xx = 0.0;
    double yy = 0.0;
    for (std::size_t k = 0; k < x.dim(); ++k) {
        const double xs = w[k] * x[k];
        const double ys = w[k] * y[k];
        xy += xs * ys;
        xx += xs * xs;
        yy += ys * ys;
    }
    return clamp_similarity(xy / (std::sqrt(xx) * std::sqrt(yy)));
}

}  // namespace negadapt
