#include "ccfi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccfi {

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double value)
    : rows_(rows), cols_(cols), data_(rows * cols, value) {}

void Matrix::append_column(std::span<const double> column) {
    if (column.size() != rows_) {
        throw std::invalid_argument("append_column: column length does not match row count");
    }
    data_.insert(data_.end(), column.begin(), column.end());
    ++cols_;
}

void Matrix::append_zero_columns(std::size_t count) {
    data_.insert(data_.end(), count * rows_, 0.0);
    cols_ += count;
}

Vec log_softmax(const Vec& logits) {
    if (logits.empty()) {
        throw std::invalid_argument("log_softmax: empty input");
    }
    if (!all_finite(logits)) {
        throw std::invalid_argument("log_softmax: non-finite input");
    }
    const double shift = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    Vec out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - shift;
        sum += std::exp(out[i]);
    }
    const double log_sum = std::log(sum);  // sum >= 1, so log is safe
    for (double& v : out) {
        v -= log_sum;
    }
    return out;
}

Vec softmax(const Vec& logits) {
    Vec out = log_softmax(logits);
    for (double& v : out) {
        v = std::exp(v);
    }
    return out;
}

Vec matvec(const Matrix& m, const Vec& v) {
    if (v.size() != m.cols()) {
        throw std::invalid_argument("matvec: inner dimensions do not agree");
    }
    Vec out(m.rows(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto col = m.column(c);
        const double scale = v[c];
        for (std::size_t r = 0; r < m.rows(); ++r) {
            out[r] += scale * col[r];
        }
    }
    return out;
}

Vec matvec_transposed(const Matrix& m, const Vec& v) {
    if (v.size() != m.rows()) {
        throw std::invalid_argument("matvec_transposed: inner dimensions do not agree");
    }
    Vec out(m.cols(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const auto col = m.column(c);
        double acc = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            acc += col[r] * v[r];
        }
        out[c] = acc;
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
        word = splitmix64(s);
    }
    if (state_[0] == 0 && state_[1] == 0 && state_[2] == 0 && state_[3] == 0) {
        state_[0] = 1;
    }
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("Rng::below: bound must be positive");
    }
    const std::uint64_t threshold = (0 - bound) % bound;
    std::uint64_t r = 0;
    do {
        r = next_u64();
    } while (r < threshold);
    return r % bound;
}

Rng Rng::split(std::uint64_t stream) const {
    std::uint64_t x = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
    return Rng(splitmix64(x));
}

}  // namespace ccfi
