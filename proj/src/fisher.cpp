#include "ccfi/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccfi {

ParameterInfoTable::ParameterInfoTable(Matrix values) : values_(std::move(values)) {
    for (double v : values_.values()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("ParameterInfoTable: entries must be finite and >= 0");
        }
    }
}

double ParameterInfoTable::total() const {
    double sum = 0.0;
    for (double v : values_.values()) {
        sum += v;
    }
    return sum;
}

ExemplarStore::ExemplarStore(double sample_rate) : sample_rate_(sample_rate) {}

const std::vector<ScoredExample>& ExemplarStore::exemplars(const std::string& id) const {
    auto it = buckets_.find(id);
    if (it == buckets_.end()) {
        throw std::invalid_argument("ExemplarStore: no bucket for class '" + id + "'");
    }
    return it->second;
}

std::size_t ExemplarStore::total_count() const {
    std::size_t n = 0;
    for (const auto& id : class_order_) {
        n += buckets_.at(id).size();
    }
    return n;
}

std::vector<LabeledExample> ExemplarStore::all_examples() const {
    std::vector<LabeledExample> out;
    out.reserve(total_count());
    for (const auto& id : class_order_) {
        for (const auto& scored : buckets_.at(id)) {
            out.push_back(scored.example);
        }
    }
    return out;
}

void ExemplarStore::add_class_bucket(const std::string& id, std::vector<ScoredExample> bucket) {
    if (buckets_.count(id) != 0) {
        throw std::invalid_argument("ExemplarStore: class '" + id + "' already present");
    }
    for (std::size_t i = 0; i < bucket.size(); ++i) {
        const ScoredExample& scored = bucket[i];
        if (scored.example.label != id) {
            throw std::invalid_argument("ExemplarStore: example label does not match bucket '" +
                                        id + "'");
        }
        if (!std::isfinite(scored.score) || scored.score < 0.0) {
            throw std::invalid_argument("ExemplarStore: scores must be finite and >= 0");
        }
        if (i > 0 && bucket[i - 1].score < scored.score) {
            throw std::invalid_argument("ExemplarStore: bucket scores must be non-increasing");
        }
    }
    class_order_.push_back(id);
    buckets_.emplace(id, std::move(bucket));
}

void ExemplarStore::merge(ExemplarStore other) {
    for (auto& id : other.class_order_) {
        add_class_bucket(id, std::move(other.buckets_.at(id)));
    }
}

double fisher_diff(const SoftmaxHead& head, const LabeledExample& example) {
    if (example.features.size() != head.feature_dim()) {
        throw std::invalid_argument("fisher_diff: feature dimension mismatch");
    }
    const std::size_t target = head.class_index(example.label);
    const Vec probs = softmax(matvec_transposed(head.weights(), example.features));

    double x_sq = 0.0;
    for (double v : example.features) {
        x_sq += v * v;
    }
    double resid_sq = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double r = (j == target ? 1.0 : 0.0) - probs[j];
        resid_sq += r * r;
    }
    return x_sq * resid_sq;
}

ParameterInfoTable empirical_fisher(const SoftmaxHead& head,
                                    const std::vector<LabeledExample>& dataset) {
    if (dataset.empty()) {
        throw std::invalid_argument("empirical_fisher: empty dataset");
    }
    Matrix table(head.feature_dim(), head.num_classes(), 0.0);
    for (const auto& example : dataset) {
        if (example.features.size() != head.feature_dim()) {
            throw std::invalid_argument("empirical_fisher: feature dimension mismatch");
        }
        const std::size_t target = head.class_index(example.label);
        const Vec probs = softmax(matvec_transposed(head.weights(), example.features));
        for (std::size_t j = 0; j < head.num_classes(); ++j) {
            const double coef = (j == target ? 1.0 : 0.0) - probs[j];
            const double coef_sq = coef * coef;
            auto out = table.column(j);
            for (std::size_t a = 0; a < head.feature_dim(); ++a) {
                out[a] += coef_sq * example.features[a] * example.features[a];
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (double& v : table.values()) {
        v *= inv_n;
    }
    return ParameterInfoTable(std::move(table));
}

std::size_t selection_count(std::size_t class_size, double rate, bool min_one_per_class) {
    auto count = static_cast<std::size_t>(
        std::floor(static_cast<double>(class_size) * rate));
    count = std::min(count, class_size);
    if (min_one_per_class && count == 0) {
        count = 1;
    }
    return count;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> group_indices_by_class(
    const std::vector<LabeledExample>& dataset, const SoftmaxHead& head) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    std::unordered_map<std::string, std::size_t> position;
    for (const auto& id : head.class_ids()) {
        position.emplace(id, position.size());
        groups.emplace_back(id, std::vector<std::size_t>{});
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto it = position.find(dataset[i].label);
        if (it == position.end()) {
            throw std::invalid_argument("select_exemplars: unregistered class '" +
                                        dataset[i].label + "'");
        }
        groups[it->second].second.push_back(i);
    }
    std::erase_if(groups, [](const auto& g) { return g.second.empty(); });
    return groups;
}

ExemplarStore select_exemplars(const std::vector<LabeledExample>& dataset, const SoftmaxHead& head,
                               double rate, const SelectionOptions& options) {
    if (!(rate > 0.0) || rate > 1.0) {
        throw std::invalid_argument("select_exemplars: rate must be in (0, 1]");
    }
    if (dataset.empty()) {
        throw std::invalid_argument("select_exemplars: empty dataset");
    }

    std::vector<double> scores(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        scores[i] = fisher_diff(head, dataset[i]);
    }

    ExemplarStore store(rate);
    for (auto& [class_id, indices] : group_indices_by_class(dataset, head)) {
        std::sort(indices.begin(), indices.end(), [&scores](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) {
                return scores[a] > scores[b];
            }
            return a < b;
        });
        const std::size_t keep = selection_count(indices.size(), rate, options.min_one_per_class);
        std::vector<ScoredExample> bucket;
        bucket.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) {
            bucket.push_back({dataset[indices[i]], scores[indices[i]], indices[i]});
        }
        if (!bucket.empty()) {
            store.add_class_bucket(class_id, std::move(bucket));
        }
    }
    return store;
}

}  // namespace ccfi
