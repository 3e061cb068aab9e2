#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Dense vector/matrix primitives with analytic backward passes.
// Matrices are row-major, shape (rows, cols). Every backward takes the
// upstream gradient and accumulates into the given gradient buffers.

namespace jointkge {

using Vec = std::vector<double>;

inline void check_same_size(const char* op, size_t a, size_t b) {
    if (a != b)
        throw std::invalid_argument(std::string(op) + ": size mismatch " +
                                    std::to_string(a) + " vs " + std::to_string(b));
}

inline Vec add(const Vec& a, const Vec& b) {
    check_same_size("add", a.size(), b.size());
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vec sub(const Vec& a, const Vec& b) {
    check_same_size("sub", a.size(), b.size());
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vec scale(const Vec& a, double s) {
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

inline void axpy(double s, const Vec& x, std::span<double> y) {
    check_same_size("axpy", x.size(), y.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline Vec elementwise_mul(const Vec& a, const Vec& b) {
    check_same_size("elementwise_mul", a.size(), b.size());
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

// y = W x, W is (m x n) row-major.
inline Vec matvec(std::span<const double> w, size_t m, size_t n, const Vec& x) {
    if (w.size() != m * n || x.size() != n)
        throw std::invalid_argument("matvec: shape mismatch W(" + std::to_string(m) +
                                    "x" + std::to_string(n) + ") x " + std::to_string(x.size()));
    Vec y(m, 0.0);
    for (size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* row = w.data() + i * n;
        for (size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

// dW += dy x^T ; dx += W^T dy
inline void matvec_backward(std::span<const double> w, size_t m, size_t n, const Vec& x,
                            const Vec& dy, std::span<double> dw, Vec& dx) {
    if (dy.size() != m) throw std::invalid_argument("matvec_backward: bad dy size");
    if (dx.empty()) dx.assign(n, 0.0);
    for (size_t i = 0; i < m; ++i) {
        const double g = dy[i];
        const double* row = w.data() + i * n;
        double* drow = dw.data() + i * n;
        for (size_t j = 0; j < n; ++j) {
            drow[j] += g * x[j];
            dx[j] += row[j] * g;
        }
    }
}

inline Vec concat(const Vec& a, const Vec& b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Vec sum_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) throw std::invalid_argument("sum_rows: empty input");
    Vec out(rows[0].size(), 0.0);
    for (const auto& r : rows) {
        check_same_size("sum_rows", r.size(), out.size());
        for (size_t i = 0; i < r.size(); ++i) out[i] += r[i];
    }
    return out;
}

inline double l1_dist(const Vec& a, const Vec& b) {
    check_same_size("l1_dist", a.size(), b.size());
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
    return d;
}

// d/da l1_dist = sign(a-b), with sign(0) = 0
inline void l1_dist_backward(const Vec& a, const Vec& b, double up, Vec& da, Vec& db) {
    if (da.empty()) da.assign(a.size(), 0.0);
    if (db.empty()) db.assign(b.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i) {
        double s = (a[i] > b[i]) ? 1.0 : (a[i] < b[i] ? -1.0 : 0.0);
        da[i] += up * s;
        db[i] -= up * s;
    }
}

inline double sq_l2_dist(const Vec& a, const Vec& b) {
    check_same_size("sq_l2_dist", a.size(), b.size());
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double u = a[i] - b[i];
        d += u * u;
    }
    return d;
}

inline void sq_l2_dist_backward(const Vec& a, const Vec& b, double up, Vec& da, Vec& db) {
    if (da.empty()) da.assign(a.size(), 0.0);
    if (db.empty()) db.assign(b.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i) {
        const double g = up * 2.0 * (a[i] - b[i]);
        da[i] += g;
        db[i] -= g;
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec sigmoid(const Vec& x) {
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
    return out;
}

// dx += dy * y * (1-y), y = sigmoid(x)
inline void sigmoid_backward(const Vec& y, const Vec& dy, Vec& dx) {
    if (dx.empty()) dx.assign(y.size(), 0.0);
    for (size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

inline Vec tanh_vec(const Vec& x) {
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
    return out;
}

inline void tanh_backward(const Vec& y, const Vec& dy, Vec& dx) {
    if (dx.empty()) dx.assign(y.size(), 0.0);
    for (size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

inline Vec softmax(const Vec& x) {
    if (x.empty()) throw std::invalid_argument("softmax: empty input");
    const double mx = *std::max_element(x.begin(), x.end());
    Vec out(x.size());
    double z = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        z += out[i];
    }
    for (auto& v : out) v /= z;
    return out;
}

// dx_i += y_i * (dy_i - sum_j dy_j y_j)
inline void softmax_backward(const Vec& y, const Vec& dy, Vec& dx) {
    if (dx.empty()) dx.assign(y.size(), 0.0);
    double dot = 0.0;
    for (size_t i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
    for (size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - dot);
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_size("dot", a.size(), b.size());
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace jointkge
