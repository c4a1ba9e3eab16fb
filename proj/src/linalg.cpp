#include "mktcn/linalg.hpp"

namespace mktcn {

namespace {

// GCC/Clang vector extension, 4 lanes of double with unaligned loads/stores.
typedef double v4df __attribute__((vector_size(32), aligned(8)));

inline v4df load4(const double* p) { return *reinterpret_cast<const v4df*>(p); }
inline void store4(double* p, v4df v) { *reinterpret_cast<v4df*>(p) = v; }
inline v4df bcast(double x) { return v4df{x, x, x, x}; }

// 4 rows x 16 columns of C held in registers across the k loop.
void tile4x16(double* __restrict c, const double* __restrict a,
              const double* __restrict b, std::size_t k,
              std::size_t ldc, std::size_t lda, std::size_t ldb) {
    v4df acc[4][4];
    for (int r = 0; r < 4; ++r)
        for (int j = 0; j < 4; ++j) acc[r][j] = load4(c + r * ldc + 4 * j);
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * ldb;
        const v4df b0 = load4(brow), b1 = load4(brow + 4);
        const v4df b2 = load4(brow + 8), b3 = load4(brow + 12);
        for (int r = 0; r < 4; ++r) {
            const v4df av = bcast(a[r * lda + p]);
            acc[r][0] += av * b0;
            acc[r][1] += av * b1;
            acc[r][2] += av * b2;
            acc[r][3] += av * b3;
        }
    }
    for (int r = 0; r < 4; ++r)
        for (int j = 0; j < 4; ++j) store4(c + r * ldc + 4 * j, acc[r][j]);
}

// One row of C, 16 columns.
void tile1x16(double* __restrict c, const double* __restrict a,
              const double* __restrict b, std::size_t k, std::size_t ldb) {
    v4df acc[4];
    for (int j = 0; j < 4; ++j) acc[j] = load4(c + 4 * j);
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * ldb;
        const v4df av = bcast(a[p]);
        acc[0] += av * load4(brow);
        acc[1] += av * load4(brow + 4);
        acc[2] += av * load4(brow + 8);
        acc[3] += av * load4(brow + 12);
    }
    for (int j = 0; j < 4; ++j) store4(c + 4 * j, acc[j]);
}

// Scalar tail for leftover columns.
void tail1xN(double* __restrict c, const double* __restrict a,
             const double* __restrict b, std::size_t k, std::size_t n,
             std::size_t ldb) {
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a[p];
        const double* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
}

inline double hsum(v4df v) { return (v[0] + v[1]) + (v[2] + v[3]); }

}  // namespace

void gemm_acc(double* c, const double* a, const double* b,
              std::size_t m, std::size_t k, std::size_t n,
              std::size_t ldc, std::size_t lda, std::size_t ldb) {
    const std::size_t m4 = m - m % 4;
    const std::size_t n16 = n - n % 16;
    for (std::size_t i = 0; i < m4; i += 4) {
        for (std::size_t j = 0; j < n16; j += 16)
            tile4x16(c + i * ldc + j, a + i * lda, b + j, k, ldc, lda, ldb);
        if (n16 < n)
            for (int r = 0; r < 4; ++r)
                tail1xN(c + (i + r) * ldc + n16, a + (i + r) * lda, b + n16, k,
                        n - n16, ldb);
    }
    for (std::size_t i = m4; i < m; ++i) {
        for (std::size_t j = 0; j < n16; j += 16)
            tile1x16(c + i * ldc + j, a + i * lda, b + j, k, ldb);
        if (n16 < n) tail1xN(c + i * ldc + n16, a + i * lda, b + n16, k, n - n16, ldb);
    }
}

void gemm_abt_acc(double* c, const double* a, const double* b,
                  std::size_t m, std::size_t k, std::size_t n,
                  std::size_t ldc, std::size_t lda, std::size_t ldb) {
    // C[i][j] += dot(A[i], B[j]); both operands stream contiguously over k.
    const std::size_t k4 = k - k % 4;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * lda;
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            const double* b0 = b + j * ldb;
            const double* b1 = b + (j + 1) * ldb;
            v4df s0 = {0, 0, 0, 0}, s1 = {0, 0, 0, 0};
            for (std::size_t p = 0; p < k4; p += 4) {
                const v4df av = load4(arow + p);
                s0 += av * load4(b0 + p);
                s1 += av * load4(b1 + p);
            }
            double d0 = hsum(s0), d1 = hsum(s1);
            for (std::size_t p = k4; p < k; ++p) {
                d0 += arow[p] * b0[p];
                d1 += arow[p] * b1[p];
            }
            c[i * ldc + j] += d0;
            c[i * ldc + j + 1] += d1;
        }
        for (; j < n; ++j) {
            const double* brow = b + j * ldb;
            v4df s = {0, 0, 0, 0};
            for (std::size_t p = 0; p < k4; p += 4) s += load4(arow + p) * load4(brow + p);
            double d = hsum(s);
            for (std::size_t p = k4; p < k; ++p) d += arow[p] * brow[p];
            c[i * ldc + j] += d;
        }
    }
}

}  // namespace mktcn
