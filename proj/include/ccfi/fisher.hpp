#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ccfi/classifier.hpp"
#include "ccfi/linalg.hpp"

namespace ccfi {

// Per-parameter empirical Fisher information, aligned element-for-element
// with the head's weight matrix.
class ParameterInfoTable {
public:
    ParameterInfoTable() = default;
    explicit ParameterInfoTable(Matrix values);

    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }

    double total() const;

private:
    Matrix values_;
};

struct ScoredExample {
    LabeledExample example;
    double score = 0.0;
    std::size_t source_index = 0;  // position in the dataset the example was selected from
};

// Per-class exemplar buckets, each ordered by descending score. Class order
// is insertion order, which follows the head's class registry.
class ExemplarStore {
public:
    ExemplarStore() = default;
    explicit ExemplarStore(double sample_rate);

    double sample_rate() const { return sample_rate_; }
    const std::vector<std::string>& classes() const { return class_order_; }
    bool has_class(const std::string& id) const { return buckets_.count(id) != 0; }
    const std::vector<ScoredExample>& exemplars(const std::string& id) const;

    std::size_t total_count() const;
    std::vector<LabeledExample> all_examples() const;

    // Bucket must be sorted by descending score and carry matching labels.
    void add_class_bucket(const std::string& id, std::vector<ScoredExample> bucket);
    void merge(ExemplarStore other);

private:
    double sample_rate_ = 1.0;
    std::vector<std::string> class_order_;
    std::unordered_map<std::string, std::vector<ScoredExample>> buckets_;
};

// Total single-example Fisher information over the head parameters: the sum
// of squared partials of log p(y | x) with respect to every weight, which
// collapses to |x|^2 * |onehot(y) - p|^2.
double fisher_diff(const SoftmaxHead& head, const LabeledExample& example);

// Mean over the dataset of per-parameter squared log-likelihood gradients
// (diagonal empirical Fisher).
ParameterInfoTable empirical_fisher(const SoftmaxHead& head,
                                    const std::vector<LabeledExample>& dataset);

struct SelectionOptions {
    bool min_one_per_class = true;
};

// Number of exemplars kept for a class of the given size.
std::size_t selection_count(std::size_t class_size, double rate, bool min_one_per_class);

// Dataset indices grouped per class, classes in head registry order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_indices_by_class(
    const std::vector<LabeledExample>& dataset, const SoftmaxHead& head);

// Keeps the top floor(|D_k| * rate) examples of each class by score,
// descending; ties break toward the lower dataset index.
ExemplarStore select_exemplars(const std::vector<LabeledExample>& dataset, const SoftmaxHead& head,
                               double rate, const SelectionOptions& options = {});

}  // namespace ccfi
