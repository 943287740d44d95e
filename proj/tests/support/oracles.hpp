#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "exs/explainer.hpp"

namespace exs::testing {

struct RidgeSolution {
    double intercept = 0.0;
    std::vector<double> coefficients;
};

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (a[pivot][col] == 0.0) throw std::runtime_error("singular system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

/// Brute-force weighted ridge: builds the augmented normal equations
/// (Z'WZ + diag(0, l, ..., l)) beta = Z'Wy with Z = [1 | presence] and solves
/// them directly. No centring, no shared code with the library fit.
inline RidgeSolution brute_force_ridge(const std::vector<PerturbedSample>& samples, double lambda) {
    const std::size_t m = samples.front().presence.size();
    const std::size_t p = m + 1;
    std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
    std::vector<double> b(p, 0.0);
    for (const auto& s : samples) {
        std::vector<double> z(p, 1.0);
        for (std::size_t j = 0; j < m; ++j) z[j + 1] = s.presence[j];
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < p; ++c) a[r][c] += s.weight * z[r] * z[c];
            b[r] += s.weight * z[r] * s.label;
        }
    }
    for (std::size_t j = 1; j < p; ++j) a[j][j] += lambda;
    auto beta = gauss_solve(a, b);
    return {beta[0], std::vector<double>(beta.begin() + 1, beta.end())};
}

/// BM25 for one term written out longhand (k1 = 1.2, b = 0.75).
inline double bm25_by_hand(double tf, double doc_len, double avg_len, double n_docs, double df) {
    double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
    return idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * doc_len / avg_len));
}

}  // namespace exs::testing
