#include "modalsim/extended.hpp"

extern "C" {
#include <quadmath.h>
}

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace modalsim::linalg {

namespace {

using QMatrix = std::vector<std::vector<quad>>;  // column list

quad dot(const std::vector<quad>& a, const std::vector<quad>& b) {
    quad s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

std::vector<quad> multiply(const ExtendedSymmetricMatrix& m, const std::vector<quad>& v) {
    const int n = m.size();
    std::vector<quad> out(n, 0);
    for (int i = 0; i < n; ++i) {
        quad s = 0;
        for (int j = 0; j < n; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

// Modified Gram-Schmidt with one re-orthogonalization pass.
void orthonormalize(QMatrix& q) {
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < i; ++k) {
                const quad c = dot(q[k], q[i]);
                for (std::size_t r = 0; r < q[i].size(); ++r) q[i][r] -= c * q[k][r];
            }
        }
        const quad nrm = sqrtq(dot(q[i], q[i]));
        if (nrm == 0) throw std::runtime_error("refine_leading_eigenvalues: subspace collapsed");
        for (auto& x : q[i]) x /= nrm;
    }
}

// Cyclic Jacobi for a small dense symmetric matrix (row-major k x k).
// Returns eigenvalues and fills `vecs` (row-major, columns are eigenvectors).
std::vector<quad> jacobi(std::vector<quad> a, int k, std::vector<quad>& vecs) {
    vecs.assign(static_cast<std::size_t>(k) * k, 0);
    for (int i = 0; i < k; ++i) vecs[i * k + i] = 1;
    auto at = [&](int i, int j) -> quad& { return a[static_cast<std::size_t>(i) * k + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        quad off = 0, diag = 0;
        for (int i = 0; i < k; ++i) {
            diag += at(i, i) * at(i, i);
            for (int j = i + 1; j < k; ++j) off += at(i, j) * at(i, j);
        }
        if (off <= static_cast<quad>(1e-66) * diag) break;
        for (int p = 0; p < k; ++p) {
            for (int r = p + 1; r < k; ++r) {
                const quad apr = at(p, r);
                if (apr == 0) continue;
                const quad theta = (at(r, r) - at(p, p)) / (2 * apr);
                const quad t = (theta >= 0 ? 1 : -1) / (fabsq(theta) + sqrtq(theta * theta + 1));
                const quad c = 1 / sqrtq(t * t + 1);
                const quad s = t * c;
                for (int j = 0; j < k; ++j) {
                    const quad apj = at(p, j), arj = at(r, j);
                    at(p, j) = c * apj - s * arj;
                    at(r, j) = s * apj + c * arj;
                }
                for (int i = 0; i < k; ++i) {
                    const quad aip = at(i, p), air = at(i, r);
                    at(i, p) = c * aip - s * air;
                    at(i, r) = s * aip + c * air;
                }
                for (int i = 0; i < k; ++i) {
                    const quad vip = vecs[i * k + p], vir = vecs[i * k + r];
                    vecs[i * k + p] = c * vip - s * vir;
                    vecs[i * k + r] = s * vip + c * vir;
                }
            }
        }
    }
    std::vector<quad> ev(k);
    for (int i = 0; i < k; ++i) ev[i] = at(i, i);
    return ev;
}

}  // namespace

ExtendedSymmetricMatrix::ExtendedSymmetricMatrix(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("ExtendedSymmetricMatrix: size must be positive");
    data_.assign(static_cast<std::size_t>(n) * n, 0);
}

void ExtendedSymmetricMatrix::set(int i, int j, quad value) {
    data_[static_cast<std::size_t>(i) * n_ + j] = value;
    data_[static_cast<std::size_t>(j) * n_ + i] = value;
}

void ExtendedSymmetricMatrix::scale(quad factor) {
    for (auto& x : data_) x *= factor;
}

quad ExtendedSymmetricMatrix::trace() const {
    quad t = 0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

Eigen::MatrixXd ExtendedSymmetricMatrix::to_double() const {
    Eigen::MatrixXd out(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) out(i, j) = static_cast<double>((*this)(i, j));
    return out;
}

RefinedSpectrum refine_leading_eigenvalues(const ExtendedSymmetricMatrix& m, const Eigen::MatrixXd& seeds,
                                           int n_levels, int iterations) {
    const int n = m.size();
    const int k = static_cast<int>(seeds.cols());
    if (seeds.rows() != n) throw std::invalid_argument("refine_leading_eigenvalues: seed dimension mismatch");
    if (n_levels < 1 || n_levels > k)
        throw std::invalid_argument("refine_leading_eigenvalues: need 1 <= n_levels <= number of seed vectors");
    if (iterations < 0) throw std::invalid_argument("refine_leading_eigenvalues: iterations must be >= 0");

    QMatrix q(k, std::vector<quad>(n));
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < n; ++r) q[c][r] = seeds(r, c);
    orthonormalize(q);

    for (int it = 0; it < iterations; ++it) {
        for (int c = 0; c < k; ++c) q[c] = multiply(m, q[c]);
        orthonormalize(q);
    }

    // Rayleigh-Ritz on span(q).
    QMatrix mq(k);
    for (int c = 0; c < k; ++c) mq[c] = multiply(m, q[c]);
    std::vector<quad> h(static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            const quad v = dot(q[i], mq[j]);
            h[i * k + j] = v;
            h[j * k + i] = v;
        }
    std::vector<quad> vecs;
    std::vector<quad> ev = jacobi(h, k, vecs);

    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ev[a] > ev[b]; });

    RefinedSpectrum out;
    out.subspace_dim = k;
    out.iterations = iterations;
    out.eigenvalues.resize(n_levels);
    for (int l = 0; l < n_levels; ++l) {
        const int idx = order[l];
        out.eigenvalues(l) = static_cast<double>(ev[idx]);
        // Residual of the Ritz pair: M y - lambda y with y = Q s.
        std::vector<quad> res(n, 0);
        for (int c = 0; c < k; ++c) {
            const quad s = vecs[c * k + idx];
            for (int r = 0; r < n; ++r) res[r] += s * (mq[c][r] - ev[idx] * q[c][r]);
        }
        out.max_residual = std::max(out.max_residual, static_cast<double>(sqrtq(dot(res, res))));
    }
    return out;
}

}  // namespace modalsim::linalg
