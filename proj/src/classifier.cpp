#include "ccfi/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ccfi {

SoftmaxHead::SoftmaxHead(std::size_t feature_dim, std::vector<std::string> class_ids,
                         Matrix weights)
    : weights_(std::move(weights)), class_ids_(std::move(class_ids)) {
    if (feature_dim == 0) {
        throw std::invalid_argument("SoftmaxHead: feature dimension must be positive");
    }
    if (class_ids_.empty()) {
        throw std::invalid_argument("SoftmaxHead: at least one class is required");
    }
    if (weights_.rows() != feature_dim || weights_.cols() != class_ids_.size()) {
        throw std::invalid_argument("SoftmaxHead: weight shape does not match (h, k)");
    }
    if (!all_finite(weights_.values())) {
        throw std::invalid_argument("SoftmaxHead: weights must be finite");
    }
    for (std::size_t i = 0; i < class_ids_.size(); ++i) {
        if (!index_.emplace(class_ids_[i], i).second) {
            throw std::invalid_argument("SoftmaxHead: duplicate class id '" + class_ids_[i] + "'");
        }
    }
}

SoftmaxHead SoftmaxHead::zeros(std::size_t feature_dim, std::vector<std::string> class_ids) {
    Matrix w(feature_dim, class_ids.size(), 0.0);
    return SoftmaxHead(feature_dim, std::move(class_ids), std::move(w));
}

SoftmaxHead SoftmaxHead::random_init(std::size_t feature_dim, std::vector<std::string> class_ids,
                                     double stddev, Rng& rng) {
    Matrix w(feature_dim, class_ids.size());
    for (std::size_t c = 0; c < w.cols(); ++c) {
        for (double& value : w.column(c)) {
            value = rng.normal(0.0, stddev);
        }
    }
    return SoftmaxHead(feature_dim, std::move(class_ids), std::move(w));
}

std::size_t SoftmaxHead::class_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw std::invalid_argument("unregistered class '" + id + "'");
    }
    return it->second;
}

void SoftmaxHead::register_classes(std::span<const std::string> new_ids) {
    for (const auto& id : new_ids) {
        if (!index_.emplace(id, class_ids_.size()).second) {
            throw std::invalid_argument("duplicate class id '" + id + "'");
        }
        class_ids_.push_back(id);
    }
}

AdamState::AdamState(std::size_t rows, std::size_t cols, AdamConfig config)
    : m_(rows, cols, 0.0), v_(rows, cols, 0.0), config_(config) {}

void AdamState::extend_columns(std::size_t count) {
    m_.append_zero_columns(count);
    v_.append_zero_columns(count);
}

Vec predict_logprobs(const SoftmaxHead& head, const Vec& x) {
    if (x.size() != head.feature_dim()) {
        throw std::invalid_argument("predict_logprobs: feature dimension mismatch");
    }
    return log_softmax(matvec_transposed(head.weights(), x));
}

std::size_t predict_class(const SoftmaxHead& head, const Vec& x) {
    if (x.size() != head.feature_dim()) {
        throw std::invalid_argument("predict_class: feature dimension mismatch");
    }
    const Vec logits = matvec_transposed(head.weights(), x);
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.size(); ++j) {
        if (logits[j] > logits[best]) {
            best = j;
        }
    }
    return best;
}

namespace {

// -log p(y | x) and, optionally, the per-example gradient added into `grad`.
double example_nll(const SoftmaxHead& head, const LabeledExample& example, Matrix* grad) {
    if (example.features.size() != head.feature_dim()) {
        throw std::invalid_argument("batch example feature dimension mismatch");
    }
    const std::size_t target = head.class_index(example.label);
    const Vec logprobs = predict_logprobs(head, example.features);
    if (grad != nullptr) {
        for (std::size_t j = 0; j < head.num_classes(); ++j) {
            const double coef = std::exp(logprobs[j]) - (j == target ? 1.0 : 0.0);
            auto out = grad->column(j);
            const Vec& x = example.features;
            for (std::size_t a = 0; a < x.size(); ++a) {
                out[a] += coef * x[a];
            }
        }
    }
    return -logprobs[target];
}

}  // namespace

double nll_loss(const SoftmaxHead& head, std::span<const LabeledExample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("nll_loss: empty batch");
    }
    double total = 0.0;
    for (const auto& example : batch) {
        total += example_nll(head, example, nullptr);
    }
    return total;
}

Matrix nll_gradient(const SoftmaxHead& head, std::span<const LabeledExample> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("nll_gradient: empty batch");
    }
    Matrix grad(head.feature_dim(), head.num_classes(), 0.0);
    for (const auto& example : batch) {
        example_nll(head, example, &grad);
    }
    return grad;
}

double nll_loss(const SoftmaxHead& head, const std::vector<LabeledExample>& dataset,
                std::span<const std::size_t> indices) {
    if (indices.empty()) {
        throw std::invalid_argument("nll_loss: empty batch");
    }
    double total = 0.0;
    for (std::size_t i : indices) {
        total += example_nll(head, dataset.at(i), nullptr);
    }
    return total;
}

void add_nll_gradient(const SoftmaxHead& head, const std::vector<LabeledExample>& dataset,
                      std::span<const std::size_t> indices, Matrix& grad) {
    for (std::size_t i : indices) {
        example_nll(head, dataset.at(i), &grad);
    }
}

void adam_step(SoftmaxHead& head, AdamState& adam, const Matrix& grad) {
    Matrix& w = head.weights();
    if (!grad.same_shape(w) || !adam.m_.same_shape(w)) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    if (!all_finite(grad.values())) {
        throw std::invalid_argument("adam_step: non-finite gradient");
    }
    const AdamConfig& cfg = adam.config_;
    ++adam.step_;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step_));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step_));
    auto wv = w.values();
    auto mv = adam.m_.values();
    auto vv = adam.v_.values();
    auto gv = grad.values();
    for (std::size_t i = 0; i < wv.size(); ++i) {
        const double g = gv[i];
        mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * g;
        vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = mv[i] / bias1;
        const double v_hat = vv[i] / bias2;
        wv[i] -= cfg.step_size * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

std::vector<double> train(SoftmaxHead& head, AdamState& adam,
                          const std::vector<LabeledExample>& dataset, const TrainConfig& config,
                          Rng& rng) {
    if (dataset.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (config.batch_size == 0) {
        throw std::invalid_argument("train: batch size must be positive");
    }
    for (const auto& example : dataset) {
        head.class_index(example.label);  // throws on unregistered labels
    }

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> epoch_losses;
    epoch_losses.reserve(config.epochs);
    std::vector<std::size_t> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            batch.assign(order.begin() + start, order.begin() + start + count);
            std::sort(batch.begin(), batch.end());  // fixed reduction order
            epoch_loss += nll_loss(head, dataset, batch);
            Matrix grad(head.feature_dim(), head.num_classes(), 0.0);
            add_nll_gradient(head, dataset, batch, grad);
            adam_step(head, adam, grad);
        }
        epoch_losses.push_back(epoch_loss);
    }
    return epoch_losses;
}

void extend_classes(SoftmaxHead& head, AdamState& adam,
                    std::span<const std::string> new_class_ids, double stddev, Rng& rng) {
    for (const auto& id : new_class_ids) {
        if (head.has_class(id)) {
            throw std::invalid_argument("extend_classes: duplicate class id '" + id + "'");
        }
    }
    head.register_classes(new_class_ids);
    Vec column(head.feature_dim());
    for (std::size_t n = 0; n < new_class_ids.size(); ++n) {
        for (double& value : column) {
            value = rng.normal(0.0, stddev);
        }
        head.weights().append_column(column);
    }
    adam.extend_columns(new_class_ids.size());
}

double accuracy(const SoftmaxHead& head, std::span<const LabeledExample> dataset) {
    if (dataset.empty()) {
        throw std::invalid_argument("accuracy: empty dataset");
    }
    std::size_t correct = 0;
    for (const auto& example : dataset) {
        const std::size_t target = head.class_index(example.label);
        if (predict_class(head, example.features) == target) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace ccfi
