#pragma once

#include <span>

#include "ccfi/classifier.hpp"
#include "ccfi/fisher.hpp"
#include "ccfi/linalg.hpp"

namespace ccfi {

// Weight snapshot the drift penalty is measured against. Shape always
// matches the extended head: old columns hold pre-extension values, new
// columns their random initialization.
struct AnchorWeights {
    Matrix weights;
};

enum class LambdaMode { Dynamic, Fixed };

struct LambdaPolicy {
    LambdaMode mode = LambdaMode::Dynamic;
    double fixed_value = 1.0;
    // A ratio below 1 would turn the penalty into a reward, so the dynamic
    // value clamps at 1 from below.
    double clamp_min = 1.0;
    double clamp_max = 1e30;
    double initial_lambda = 1.0;
    std::size_t recompute_every = 1;  // batches between dynamic recomputes
};

// Sum over parameters of table * (W - W_anchor)^2. Zero-information
// parameters (in particular freshly added class columns) contribute nothing.
double consolidation_term(const SoftmaxHead& head, const AnchorWeights& anchor,
                          const ParameterInfoTable& table);

// floor(log10(ce_new / consolidation)), clamped to the policy range. While
// the penalty is still exactly zero (first batches after an extension) the
// ratio is undefined and the previous lambda carries over.
double dynamic_lambda(double ce_new, double consolidation, const LambdaPolicy& policy,
                      double prev_lambda);

struct RetrainLoss {
    double loss = 0.0;
    double lambda_used = 0.0;
    double ce_new = 0.0;
    double ce_exemplar = 0.0;
    double consolidation = 0.0;
};

// loss = nll(new_batch) + nll(exemplar_batch) + lambda/2 * consolidation_term,
// with lambda taken from this batch's values per the policy.
RetrainLoss retrain_loss(const SoftmaxHead& head, const AnchorWeights& anchor,
                         const ParameterInfoTable& table,
                         std::span<const LabeledExample> new_batch,
                         std::span<const LabeledExample> exemplar_batch,
                         const LambdaPolicy& policy, double prev_lambda);

// Adds lambda * table * (W - W_anchor) into grad.
void add_consolidation_gradient(const SoftmaxHead& head, const AnchorWeights& anchor,
                                const ParameterInfoTable& table, double lambda, Matrix& grad);

// Gradient of the retrain loss at a fixed lambda value.
Matrix retrain_gradient(const SoftmaxHead& head, const AnchorWeights& anchor,
                        const ParameterInfoTable& table,
                        std::span<const LabeledExample> new_batch,
                        std::span<const LabeledExample> exemplar_batch, double lambda);

// Appends zero columns for newly added classes; old columns are untouched.
ParameterInfoTable extend_table(const ParameterInfoTable& table, std::size_t new_classes);

}  // namespace ccfi
