#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace negadapt {

/// One model's representation of one text.
///
/// Values are held in double precision whatever the on-disk precision was.
/// Construction rejects empty, non-finite and all-zero vectors, so every
/// live instance has a strictly positive norm.
class EmbeddingVector {
public:
    EmbeddingVector(std::string id, std::vector<double> values, std::string model_tag = {},
                    bool normalized = false);

    const std::string& id() const noexcept { return id_; }
    const std::string& model_tag() const noexcept { return model_tag_; }
    bool normalized() const noexcept { return normalized_; }
    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    /// Unit-normalized copy; the normalized flag is set on the result.
    EmbeddingVector unit() const;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::string id_;
    std::vector<double> values_;
    std::string model_tag_;
    bool normalized_ = false;
};

/// Per-dimension similarity terms, either for one pair/triplet or averaged
/// over `n_triplets` triplets.
struct ContributionVector {
    std::vector<double> values;
    std::size_t n_triplets = 0;

    std::size_t dim() const noexcept { return values.size(); }
    double sum() const noexcept;
};

struct WeightSource {
    std::string dataset;
    std::size_t n_triplets = 0;
    std::string created;  // ISO-8601 UTC
    bool degenerate_rescale = false;

    friend bool operator==(const WeightSource&, const WeightSource&) = default;
};

/// Strictly positive per-dimension weights summing to one.
class WeightVector {
public:
    WeightVector(std::vector<double> weights, double a, WeightSource source = {});

    static WeightVector uniform(std::size_t dim);

    std::size_t dim() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    double operator[](std::size_t k) const noexcept { return weights_[k]; }
    double a() const noexcept { return a_; }
    const WeightSource& source() const noexcept { return source_; }
    void set_source(WeightSource source) { source_ = std::move(source); }

    /// True when every weight is bitwise identical (the a == 0 case).
    bool is_uniform() const noexcept { return uniform_; }

    friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
    std::vector<double> weights_;
    double a_ = 0.0;
    WeightSource source_;
    bool uniform_ = false;
};

// All reductions below accumulate left to right in double precision over
// the stored dimension order, so results are bit-reproducible.

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);

double cosine(const EmbeddingVector& x, const EmbeddingVector& y);

/// Terms u_k = x_k*y_k / (|x||y|); they sum to cosine(x, y).
ContributionVector cosine_decompose(const EmbeddingVector& x, const EmbeddingVector& y);

/// decompose(t, p) - decompose(t, n), i.e. how much each dimension favours
/// the paraphrase over the negation.
ContributionVector triplet_contribution(const EmbeddingVector& t, const EmbeddingVector& p,
                                        const EmbeddingVector& n);

EmbeddingVector apply_weights(const EmbeddingVector& x, const WeightVector& w);

/// cosine(apply_weights(x, w), apply_weights(y, w)). Since the weights
/// multiply both sides, this is a weighted cosine with per-dimension
/// weights w_k^2.
double weighted_cosine(const EmbeddingVector& x, const EmbeddingVector& y, const WeightVector& w);

}  // namespace negadapt
