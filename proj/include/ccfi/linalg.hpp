#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ccfi {

using Vec = std::vector<double>;

bool all_finite(std::span<const double> values);

// Dense h x k matrix stored column-major so that appending a class column
// is a contiguous O(rows) append.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(std::size_t row, std::size_t col) { return data_[col * rows_ + row]; }
    double at(std::size_t row, std::size_t col) const { return data_[col * rows_ + row]; }

    std::span<double> column(std::size_t col) { return {data_.data() + col * rows_, rows_}; }
    std::span<const double> column(std::size_t col) const {
        return {data_.data() + col * rows_, rows_};
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    void append_column(std::span<const double> column);
    void append_zero_columns(std::size_t count);

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// log softmax(x), computed with a max shift. exp of the result sums to 1.
Vec log_softmax(const Vec& logits);
Vec softmax(const Vec& logits);

// m (rows x cols) * v (cols) -> rows
Vec matvec(const Matrix& m, const Vec& v);
// m^T (cols x rows) * v (rows) -> cols. This is the logit map W^T x.
Vec matvec_transposed(const Matrix& m, const Vec& v);

// xoshiro256++ seeded through splitmix64. The stream depends only on the
// seed and the call sequence, never on the platform. split() derives an
// independent child stream from the seed, not from the current state, so
// components stay reproducible regardless of draw order elsewhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // uniform in [0, 1) with 53 random bits
    double uniform();
    // standard normal via the Marsaglia polar method
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // unbiased integer in [0, bound)
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    Rng split(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ccfi
