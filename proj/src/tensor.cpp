#include "bpad/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bpad {

void Tensor2::check_finite(const char* what) const {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value in ") + what);
        }
    }
}

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Core kernel, C (m,n) (+)= A (m,k) * B (k,n). Register-tiled: each
// 4 x 32 block of C is accumulated in named local arrays across the full
// k loop before being added back, so the hot loop is FMA-bound rather
// than store-bound. Per element the products are summed in ascending-p
// order; the tile sum is then added onto the existing C value. The order
// is fixed, so repeated runs stay bit-identical.
void kernel_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate) {
        std::fill(c, c + m * n, 0.0);
    }
    constexpr std::size_t NR = 32;
    std::size_t i0 = 0;
    for (; i0 + 4 <= m; i0 += 4) {
        const double* a0 = a + (i0 + 0) * k;
        const double* a1 = a + (i0 + 1) * k;
        const double* a2 = a + (i0 + 2) * k;
        const double* a3 = a + (i0 + 3) * k;
        std::size_t j0 = 0;
        for (; j0 + NR <= n; j0 += NR) {
            double c0[NR] = {0}, c1[NR] = {0}, c2[NR] = {0}, c3[NR] = {0};
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * n + j0;
                const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
                for (std::size_t j = 0; j < NR; ++j) {
                    const double bv = brow[j];
                    c0[j] += v0 * bv;
                    c1[j] += v1 * bv;
                    c2[j] += v2 * bv;
                    c3[j] += v3 * bv;
                }
            }
            double* o0 = c + (i0 + 0) * n + j0;
            double* o1 = c + (i0 + 1) * n + j0;
            double* o2 = c + (i0 + 2) * n + j0;
            double* o3 = c + (i0 + 3) * n + j0;
            for (std::size_t j = 0; j < NR; ++j) {
                o0[j] += c0[j];
                o1[j] += c1[j];
                o2[j] += c2[j];
                o3[j] += c3[j];
            }
        }
        for (std::size_t p = 0; p < k && j0 < n; ++p) {
            const double* brow = b + p * n;
            const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
            double* crow0 = c + (i0 + 0) * n;
            double* crow1 = c + (i0 + 1) * n;
            double* crow2 = c + (i0 + 2) * n;
            double* crow3 = c + (i0 + 3) * n;
            for (std::size_t j = j0; j < n; ++j) {
                crow0[j] += v0 * brow[j];
                crow1[j] += v1 * brow[j];
                crow2[j] += v2 * brow[j];
                crow3[j] += v3 * brow[j];
            }
        }
    }
    for (; i0 < m; ++i0) {
        const double* arow = a + i0 * k;
        double* crow = c + i0 * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

} // namespace

void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
    require(a.cols == b.rows, "matmul: inner dimensions differ");
    require(out.rows == a.rows && out.cols == b.cols, "matmul: bad output shape");
    kernel_nn(a.data.data(), b.data.data(), out.data.data(), a.rows, a.cols,
              b.cols, accumulate);
}

void matmul_at(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
    require(a.rows == b.rows, "matmul_at: inner dimensions differ");
    require(out.rows == a.cols && out.cols == b.cols, "matmul_at: bad output shape");
    // Transpose a into a scratch buffer once, then reuse the fast kernel.
    thread_local std::vector<double> scratch;
    const std::size_t m = a.cols, k = a.rows, n = b.cols;
    scratch.resize(m * k);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a.row(p);
        for (std::size_t i = 0; i < m; ++i) {
            scratch[i * k + p] = arow[i];
        }
    }
    kernel_nn(scratch.data(), b.data.data(), out.data.data(), m, k, n,
              accumulate);
}

void matmul_bt(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
    require(a.cols == b.cols, "matmul_bt: inner dimensions differ");
    require(out.rows == a.rows && out.cols == b.rows, "matmul_bt: bad output shape");
    // Transpose b into a scratch buffer once, then reuse the fast kernel.
    thread_local std::vector<double> scratch;
    const std::size_t k = b.cols, n = b.rows;
    scratch.resize(k * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* brow = b.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            scratch[j * n + i] = brow[j];
        }
    }
    kernel_nn(a.data.data(), scratch.data(), out.data.data(), a.rows, k, n,
              accumulate);
}

void add_bias_rows(Tensor2& m, const Tensor2& bias) {
    require(bias.rows == 1 && bias.cols == m.cols, "add_bias_rows: bad bias shape");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            row[j] += bias.data[j];
        }
    }
}

} // namespace bpad
