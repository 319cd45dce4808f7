#include "semgraph/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace semgraph {

Mat3 Mat3::rotation(const Point3& axis, double angle) {
    const double len = std::sqrt(dot(axis, axis));
    const Point3 k = (1.0 / len) * axis;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    // Rodrigues
    return Mat3{{t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y,
                 t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x,
                 t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c}};
}

Mat3 Mat3::transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
}

double Mat3::determinant() const {
    const Mat3& a = *this;
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

double Mat3::norm() const {
    double s = 0.0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
    return out;
}

Point3 operator*(const Mat3& a, const Point3& p) {
    return {a(0, 0) * p.x + a(0, 1) * p.y + a(0, 2) * p.z,
            a(1, 0) * p.x + a(1, 1) * p.y + a(1, 2) * p.z,
            a(2, 0) * p.x + a(2, 1) * p.y + a(2, 2) * p.z};
}

Mat3 operator-(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = a.m[i] - b.m[i];
    return out;
}

namespace {

Point3 column(const Mat3& a, int c) { return {a(0, c), a(1, c), a(2, c)}; }

void set_column(Mat3& a, int c, const Point3& p) {
    a(0, c) = p.x;
    a(1, c) = p.y;
    a(2, c) = p.z;
}

Point3 cross(const Point3& a, const Point3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Point3 normalized(const Point3& p) { return (1.0 / std::sqrt(dot(p, p))) * p; }

// Unit vector orthogonal to the unit vector u.
Point3 any_orthogonal(const Point3& u) {
    const Point3 axis = std::abs(u.x) <= std::abs(u.y) && std::abs(u.x) <= std::abs(u.z)
                            ? Point3{1, 0, 0}
                            : (std::abs(u.y) <= std::abs(u.z) ? Point3{0, 1, 0} : Point3{0, 0, 1});
    return normalized(cross(u, axis));
}

}  // namespace

Svd3 svd3(const Mat3& input) {
    Mat3 a = input;
    Mat3 v = Mat3::identity();

    // Rotate column pairs of a until they are mutually orthogonal; v collects the rotations.
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const Point3 cp = column(a, p);
                const Point3 cq = column(a, q);
                const double alpha = dot(cp, cp);
                const double beta = dot(cq, cq);
                const double gamma = dot(cp, cq);
                if (gamma == 0.0) continue;
                off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int r = 0; r < 3; ++r) {
                    const double ap = a(r, p);
                    const double aq = a(r, q);
                    a(r, p) = c * ap - s * aq;
                    a(r, q) = s * ap + c * aq;
                    const double vp = v(r, p);
                    const double vq = v(r, q);
                    v(r, p) = c * vp - s * vq;
                    v(r, q) = s * vp + c * vq;
                }
            }
        }
        if (off < 1e-15) break;
    }

    std::array<int, 3> order{0, 1, 2};
    std::array<double, 3> norms{};
    for (int c = 0; c < 3; ++c) {
        const Point3 col = column(a, c);
        norms[static_cast<std::size_t>(c)] = std::sqrt(dot(col, col));
    }
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
    });

    Svd3 out;
    const double scale = norms[static_cast<std::size_t>(order[0])];
    const double cutoff = scale * 1e-13;
    int rank = 0;
    for (int i = 0; i < 3; ++i) {
        const int c = order[static_cast<std::size_t>(i)];
        out.s[static_cast<std::size_t>(i)] = norms[static_cast<std::size_t>(c)];
        set_column(out.v, i, column(v, c));
        if (norms[static_cast<std::size_t>(c)] > cutoff && scale > 0.0) {
            set_column(out.u, i, (1.0 / norms[static_cast<std::size_t>(c)]) * column(a, c));
            ++rank;
        }
    }
    if (rank == 0) {
        out.u = Mat3::identity();
    } else if (rank == 1) {
        const Point3 u0 = column(out.u, 0);
        const Point3 u1 = any_orthogonal(u0);
        set_column(out.u, 1, u1);
        set_column(out.u, 2, cross(u0, u1));
    } else if (rank == 2) {
        set_column(out.u, 2, normalized(cross(column(out.u, 0), column(out.u, 1))));
    }
    return out;
}

}  // namespace semgraph
