// Minimal dense matrix type plus the handful of matmul variants the LSTM
// forward/backward passes need. Row-major binary64 throughout; inner loops
// are arranged so the compiler vectorizes the contiguous dimension.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpad {

// Numerical breakdown (NaN/Inf or a diverged optimization), as opposed to
// a misconfiguration; callers map this to the numeric-failure exit path.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& message)
        : std::runtime_error(message) {}
};

struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    std::span<const double> row_span(std::size_t i) const { return {row(i), cols}; }

    std::size_t count() const { return rows * cols; }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    // NaN/Inf anywhere is a hard error; throws NumericError naming the
    // offending tensor.
    void check_finite(const char* what) const;
};

// out = a * b (plus out when accumulate), a: (m,k), b: (k,n), out: (m,n)
void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate = false);

// out = a^T * b, a: (k,m), b: (k,n), out: (m,n)
void matmul_at(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate = false);

// out = a * b^T, a: (m,k), b: (n,k), out: (m,n)
void matmul_bt(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate = false);

// row-broadcast: m(i, :) += bias(0, :)
void add_bias_rows(Tensor2& m, const Tensor2& bias);

} // namespace bpad
