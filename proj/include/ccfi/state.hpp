#pragma once

#include <functional>
#include <vector>

#include "ccfi/classifier.hpp"
#include "ccfi/consolidation.hpp"
#include "ccfi/fisher.hpp"

namespace ccfi {

// Everything carried between increments. The head's class id list doubles as
// the class registry: columns append in arrival order and never renumber.
struct ContinualState {
    SoftmaxHead head;
    AdamState adam;
    ParameterInfoTable table;
    ExemplarStore exemplars;
    AnchorWeights anchor;
    std::size_t round = 0;

    const std::vector<std::string>& class_registry() const { return head.class_ids(); }
};

using ExemplarSelector = std::function<ExemplarStore(
    const std::vector<LabeledExample>&, const SoftmaxHead&, double rate)>;

struct SelectionConfig {
    double sample_rate = 0.01;
    bool min_one_per_class = true;
    ExemplarSelector selector;  // empty = Fisher-difference selection
};

// Adds exemplar buckets for the classes introduced by `new_class_data`,
// scored with the current (post-retrain) head.
void append_new_class_exemplars(ContinualState& state,
                                const std::vector<LabeledExample>& new_class_data,
                                const SelectionConfig& config);

// Round-end lifecycle: anchor := current weights, table := empirical Fisher
// over (stored exemplars ++ this round's data), then the exemplar store is
// extended with the new classes. Skipping this call leaves the table and
// anchor frozen at their initial-training values (modulo extension).
void refresh_anchor_and_table(ContinualState& state,
                              const std::vector<LabeledExample>& new_class_data,
                              const SelectionConfig& config);

}  // namespace ccfi
