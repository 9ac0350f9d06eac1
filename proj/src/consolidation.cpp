#include "ccfi/consolidation.hpp"

#include <cmath>
#include <stdexcept>

#include "ccfi/state.hpp"

namespace ccfi {

double consolidation_term(const SoftmaxHead& head, const AnchorWeights& anchor,
                          const ParameterInfoTable& table) {
    const Matrix& w = head.weights();
    if (!w.same_shape(anchor.weights) || !w.same_shape(table.values())) {
        throw std::invalid_argument("consolidation_term: shape mismatch");
    }
    auto wv = w.values();
    auto av = anchor.weights.values();
    auto tv = table.values().values();
    double sum = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) {
        const double drift = wv[i] - av[i];
        sum += tv[i] * drift * drift;
    }
    return sum;
}

double dynamic_lambda(double ce_new, double consolidation, const LambdaPolicy& policy,
                      double prev_lambda) {
    if (ce_new < 0.0 || consolidation < 0.0) {
        throw std::invalid_argument("dynamic_lambda: inputs must be non-negative");
    }
    if (policy.mode == LambdaMode::Fixed) {
        return policy.fixed_value;
    }
    if (consolidation < 1e-300 || ce_new == 0.0) {
        return prev_lambda;
    }
    const double raw = std::floor(std::log10(ce_new / consolidation));
    return std::min(std::max(raw, policy.clamp_min), policy.clamp_max);
}

RetrainLoss retrain_loss(const SoftmaxHead& head, const AnchorWeights& anchor,
                         const ParameterInfoTable& table,
                         std::span<const LabeledExample> new_batch,
                         std::span<const LabeledExample> exemplar_batch,
                         const LambdaPolicy& policy, double prev_lambda) {
    if (new_batch.empty() && exemplar_batch.empty()) {
        throw std::invalid_argument("retrain_loss: both batches empty");
    }
    RetrainLoss out;
    out.ce_new = new_batch.empty() ? 0.0 : nll_loss(head, new_batch);
    out.ce_exemplar = exemplar_batch.empty() ? 0.0 : nll_loss(head, exemplar_batch);
    out.consolidation = consolidation_term(head, anchor, table);
    out.lambda_used = dynamic_lambda(out.ce_new, out.consolidation, policy, prev_lambda);
    out.loss = out.ce_new + out.ce_exemplar + 0.5 * out.lambda_used * out.consolidation;
    return out;
}

void add_consolidation_gradient(const SoftmaxHead& head, const AnchorWeights& anchor,
                                const ParameterInfoTable& table, double lambda, Matrix& grad) {
    const Matrix& w = head.weights();
    if (!w.same_shape(anchor.weights) || !w.same_shape(table.values()) || !w.same_shape(grad)) {
        throw std::invalid_argument("add_consolidation_gradient: shape mismatch");
    }
    auto wv = w.values();
    auto av = anchor.weights.values();
    auto tv = table.values().values();
    auto gv = grad.values();
    for (std::size_t i = 0; i < wv.size(); ++i) {
        gv[i] += lambda * tv[i] * (wv[i] - av[i]);
    }
}

Matrix retrain_gradient(const SoftmaxHead& head, const AnchorWeights& anchor,
                        const ParameterInfoTable& table,
                        std::span<const LabeledExample> new_batch,
                        std::span<const LabeledExample> exemplar_batch, double lambda) {
    if (new_batch.empty() && exemplar_batch.empty()) {
        throw std::invalid_argument("retrain_gradient: both batches empty");
    }
    Matrix grad(head.feature_dim(), head.num_classes(), 0.0);
    auto accumulate = [&](std::span<const LabeledExample> batch) {
        if (batch.empty()) {
            return;
        }
        const Matrix g = nll_gradient(head, batch);
        auto gv = grad.values();
        auto sv = g.values();
        for (std::size_t i = 0; i < gv.size(); ++i) {
            gv[i] += sv[i];
        }
    };
    accumulate(new_batch);
    accumulate(exemplar_batch);
    add_consolidation_gradient(head, anchor, table, lambda, grad);
    return grad;
}

ParameterInfoTable extend_table(const ParameterInfoTable& table, std::size_t new_classes) {
    Matrix values = table.values();
    values.append_zero_columns(new_classes);
    return ParameterInfoTable(std::move(values));
}

void append_new_class_exemplars(ContinualState& state,
                                const std::vector<LabeledExample>& new_class_data,
                                const SelectionConfig& config) {
    if (new_class_data.empty()) {
        return;
    }
    ExemplarStore fresh =
        config.selector
            ? config.selector(new_class_data, state.head, config.sample_rate)
            : select_exemplars(new_class_data, state.head, config.sample_rate,
                               SelectionOptions{config.min_one_per_class});
    state.exemplars.merge(std::move(fresh));
}

void refresh_anchor_and_table(ContinualState& state,
                              const std::vector<LabeledExample>& new_class_data,
                              const SelectionConfig& config) {
    std::vector<LabeledExample> fisher_data = state.exemplars.all_examples();
    fisher_data.insert(fisher_data.end(), new_class_data.begin(), new_class_data.end());
    state.table = empirical_fisher(state.head, fisher_data);
    append_new_class_exemplars(state, new_class_data, config);
    state.anchor.weights = state.head.weights();
}

}  // namespace ccfi
