#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccfi/linalg.hpp"

namespace ccfi {

struct LabeledExample {
    Vec features;
    std::string label;
};

// Trainable softmax head over frozen features: a weight matrix with one
// column per registered class. Column order is registration order and is
// never renumbered; new classes append.
class SoftmaxHead {
public:
    SoftmaxHead(std::size_t feature_dim, std::vector<std::string> class_ids, Matrix weights);

    static SoftmaxHead zeros(std::size_t feature_dim, std::vector<std::string> class_ids);
    static SoftmaxHead random_init(std::size_t feature_dim, std::vector<std::string> class_ids,
                                   double stddev, Rng& rng);

    std::size_t feature_dim() const { return weights_.rows(); }
    std::size_t num_classes() const { return weights_.cols(); }

    const Matrix& weights() const { return weights_; }
    Matrix& weights() { return weights_; }

    const std::vector<std::string>& class_ids() const { return class_ids_; }
    bool has_class(const std::string& id) const { return index_.count(id) != 0; }
    std::size_t class_index(const std::string& id) const;

    void register_classes(std::span<const std::string> new_ids);  // appends id bookkeeping only

private:
    Matrix weights_;
    std::vector<std::string> class_ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
    double step_size = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class AdamState {
public:
    AdamState(std::size_t rows, std::size_t cols, AdamConfig config = {});

    const AdamConfig& config() const { return config_; }
    std::uint64_t step_count() const { return step_; }

    const Matrix& first_moment() const { return m_; }
    const Matrix& second_moment() const { return v_; }

    void extend_columns(std::size_t count);

    friend void adam_step(SoftmaxHead& head, AdamState& adam, const Matrix& grad);
    friend class StateCheckpointAccess;

private:
    Matrix m_;
    Matrix v_;
    std::uint64_t step_ = 0;
    AdamConfig config_;
};

// log p(class | x) over the registered classes
Vec predict_logprobs(const SoftmaxHead& head, const Vec& x);

// argmax class column; ties resolve to the lowest column index
std::size_t predict_class(const SoftmaxHead& head, const Vec& x);

// Sum over the batch of -log p(y_i | x_i).
double nll_loss(const SoftmaxHead& head, std::span<const LabeledExample> batch);

// Gradient of nll_loss with respect to W: column j accumulates x * (p_j - [j == y]).
Matrix nll_gradient(const SoftmaxHead& head, std::span<const LabeledExample> batch);

// Index-based variants used by training loops. Indices select into `dataset`
// and are accumulated in the given order, so callers control the reduction
// order exactly.
double nll_loss(const SoftmaxHead& head, const std::vector<LabeledExample>& dataset,
                std::span<const std::size_t> indices);
void add_nll_gradient(const SoftmaxHead& head, const std::vector<LabeledExample>& dataset,
                      std::span<const std::size_t> indices, Matrix& grad);

void adam_step(SoftmaxHead& head, AdamState& adam, const Matrix& grad);

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    AdamConfig adam{};
};

// Minibatch Adam on the nll loss. Batch order is reshuffled every epoch from
// `rng`; within a batch, examples accumulate in ascending dataset order.
// Returns the per-epoch training loss (sum of batch losses).
std::vector<double> train(SoftmaxHead& head, AdamState& adam,
                          const std::vector<LabeledExample>& dataset, const TrainConfig& config,
                          Rng& rng);

// Appends one column per new class id, drawn N(0, stddev^2) from `rng`.
// Existing columns and their optimizer moments are untouched.
void extend_classes(SoftmaxHead& head, AdamState& adam,
                    std::span<const std::string> new_class_ids, double stddev, Rng& rng);

double accuracy(const SoftmaxHead& head, std::span<const LabeledExample> dataset);

}  // namespace ccfi
