#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace isal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPivotTolerance = 1e-12;

// LDLT of a symmetric PSD information matrix after Jacobi equilibration.
//
// Parameter blocks of these matrices differ by up to ~20 orders of magnitude
// (clock offsets in seconds vs positions in meters), so the factorization runs
// on D^-1/2 F D^-1/2. A pivot below kPivotTolerance (relative to the unit
// diagonal) marks the corresponding parameter as non-identifiable.
class SymmetricFactor {
public:
    explicit SymmetricFactor(const Matrix& F, double pivot_tol = kPivotTolerance) {
        const Index n = F.rows();
        scale_.resize(n);
        bool diag_ok = true;
        for (Index i = 0; i < n; ++i) {
            const double d = F(i, i);
            if (!(d > 0.0) || !std::isfinite(d)) {
                weak_.push_back(static_cast<std::size_t>(i));
                diag_ok = false;
                scale_(i) = 1.0;
            } else {
                scale_(i) = 1.0 / std::sqrt(d);
            }
        }
        if (!diag_ok) return;
        const Matrix scaled = scale_.asDiagonal() * F * scale_.asDiagonal();
        ldlt_.compute(scaled);
        const Vector pivots = ldlt_.vectorD();
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(ldlt_.transpositionsP());
        Vector iota(n);
        std::iota(iota.data(), iota.data() + n, 0.0);
        const Vector order = perm * iota;
        for (Index k = 0; k < n; ++k) {
            if (!(pivots(k) >= pivot_tol) || !std::isfinite(pivots(k))) {
                weak_.push_back(static_cast<std::size_t>(order(k)));
            }
        }
        std::sort(weak_.begin(), weak_.end());
    }

    bool ok() const { return weak_.empty(); }

    // Parameter indices whose pivots fell below tolerance.
    const std::vector<std::size_t>& weak_indices() const { return weak_; }

    // F^-1 * B. Only valid when ok().
    Matrix solve(const Matrix& B) const {
        const Matrix rhs = scale_.asDiagonal() * B;
        return scale_.asDiagonal() * ldlt_.solve(rhs);
    }

    Matrix inverse() const { return solve(Matrix::Identity(scale_.size(), scale_.size())); }

private:
    Vector scale_;
    Eigen::LDLT<Matrix> ldlt_;
    std::vector<std::size_t> weak_;
};

inline Matrix select_rows_cols(const Matrix& F, const std::vector<std::size_t>& rows,
                               const std::vector<std::size_t>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Index>(i), static_cast<Index>(j)) =
                F(static_cast<Index>(rows[i]), static_cast<Index>(cols[j]));
        }
    }
    return out;
}

inline Matrix principal_block(const Matrix& F, const std::vector<std::size_t>& idx) {
    return select_rows_cols(F, idx, idx);
}

// Adds `block` into `F` at rows/cols `idx`.
inline void add_block(Matrix& F, const std::vector<std::size_t>& idx, const Matrix& block) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
            F(static_cast<Index>(idx[i]), static_cast<Index>(idx[j])) +=
                block(static_cast<Index>(i), static_cast<Index>(j));
        }
    }
}

inline std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& idx) {
    std::vector<bool> in(n, false);
    for (auto i : idx) in.at(i) = true;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!in[i]) out.push_back(i);
    }
    return out;
}

inline std::vector<std::size_t> iota_indices(std::size_t n, std::size_t start = 0) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), start);
    return out;
}

}  // namespace isal
