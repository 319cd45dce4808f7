#pragma once

#include <array>

#include "semgraph/pointcloud.hpp"

namespace semgraph {

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
    static Mat3 rotation(const Point3& axis, double angle);

    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }

    Mat3 transposed() const;
    double determinant() const;
    /// Frobenius norm.
    double norm() const;

    friend Mat3 operator*(const Mat3& a, const Mat3& b);
    friend Point3 operator*(const Mat3& a, const Point3& p);
    friend Mat3 operator-(const Mat3& a, const Mat3& b);
    friend bool operator==(const Mat3&, const Mat3&) = default;
};

/// a = u * diag(s) * vᵀ with u, v orthogonal and s sorted descending.
struct Svd3 {
    Mat3 u;
    std::array<double, 3> s{};
    Mat3 v;
};

/// One-sided Jacobi SVD. Columns of u belonging to (numerically) zero
/// singular values are completed to an orthonormal basis.
Svd3 svd3(const Mat3& a);

}  // namespace semgraph
