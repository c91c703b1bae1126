#pragma once

//==============================================================================
// pointwise.h
// Per-grid-point linear algebra between fields: matrix products, the
// contractions used by the divergence-form operators, and a small dense
// matrix exponential. No transforms here, everything is local.
//==============================================================================

#include "biharm4/grid.h"

#include <cmath>
#include <cstring>

namespace biharm4 {

inline int ambient_dim_of_matrix(const Field& M, const char* who) {
    int m = 1;
    while (m * m < M.channels) ++m;
    if (m * m != M.channels || M.rank != Rank::none)
        throw ShapeMismatch(std::string(who) + ": expected a square matrix field");
    return m;
}

// out = A * B, matrix fields.
inline Field mat_mat(const Field& A, const Field& B) {
    const int m = ambient_dim_of_matrix(A, "mat_mat");
    ambient_dim_of_matrix(B, "mat_mat");
    Field out(A.grid, m * m, Rank::none);
    const std::size_t np = A.points();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double* dst = out.at(i * m + j);
            for (int k = 0; k < m; ++k) {
                const double* a = A.at(i * m + k);
                const double* b = B.at(k * m + j);
                for (std::size_t p = 0; p < np; ++p) dst[p] += a[p] * b[p];
            }
        }
    return out;
}

// out^i = sum_j A^{ij} u^j, matrix field times map field.
inline Field mat_map(const Field& A, const Field& u) {
    const int m = ambient_dim_of_matrix(A, "mat_map");
    u.require(m, Rank::none, "mat_map");
    Field out(u.grid, m, Rank::none);
    const std::size_t np = u.points();
    for (int i = 0; i < m; ++i) {
        double* dst = out.at(i);
        for (int j = 0; j < m; ++j) {
            const double* a = A.at(i * m + j);
            const double* b = u.at(j);
            for (std::size_t p = 0; p < np; ++p) dst[p] += a[p] * b[p];
        }
    }
    return out;
}

inline Field transpose_matrix(const Field& A) {
    const int m = ambient_dim_of_matrix(A, "transpose_matrix");
    Field out(A.grid, m * m, Rank::none);
    const std::size_t np = A.points();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            std::memcpy(out.at(i * m + j), A.at(j * m + i), np * sizeof(double));
    return out;
}

inline void antisymmetrize(Field& M) {
    int m = 1;
    while (m * m < M.channels) ++m;
    const int rc = rank_comps(M.rank);
    const std::size_t np = M.points();
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
            for (int s = 0; s < rc; ++s) {
                double* a = M.at(i * m + j, s);
                double* b = M.at(j * m + i, s);
                if (i == j) {
                    std::memset(a, 0, np * sizeof(double));
                    continue;
                }
                for (std::size_t p = 0; p < np; ++p) {
                    const double v = 0.5 * (a[p] - b[p]);
                    a[p] = v;
                    b[p] = -v;
                }
            }
}

inline Field identity_matrix_field(const Grid& g, int m) {
    Field out(g, m * m, Rank::none);
    for (int i = 0; i < m; ++i) {
        double* d = out.at(i * m + i);
        std::fill(d, d + out.points(), 1.0);
    }
    return out;
}

// (V . grad u)^s = sum_{j,l} V^{sj}_l  d_l u^j   (matrix-1-form against map gradient)
inline Field contract_form_grad(const Field& V, const Field& du) {
    const int m = du.channels;
    V.require(m * m, Rank::one, "contract_form_grad");
    du.require(m, Rank::one, "contract_form_grad");
    Field out(du.grid, m, Rank::none);
    const std::size_t np = du.points();
    for (int s = 0; s < m; ++s) {
        double* dst = out.at(s);
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < 4; ++l) {
                const double* v = V.at(s * m + j, l);
                const double* d = du.at(j, l);
                for (std::size_t p = 0; p < np; ++p) dst[p] += v[p] * d[p];
            }
    }
    return out;
}

// (w grad u)_l^s = sum_j w^{sj} d_l u^j  (matrix field against map gradient)
inline Field matrix_times_grad(const Field& w, const Field& du) {
    const int m = du.channels;
    w.require(m * m, Rank::none, "matrix_times_grad");
    du.require(m, Rank::one, "matrix_times_grad");
    Field out(du.grid, m, Rank::one);
    const std::size_t np = du.points();
    for (int s = 0; s < m; ++s)
        for (int l = 0; l < 4; ++l) {
            double* dst = out.at(s, l);
            for (int j = 0; j < m; ++j) {
                const double* a = w.at(s * m + j);
                const double* d = du.at(j, l);
                for (std::size_t p = 0; p < np; ++p) dst[p] += a[p] * d[p];
            }
        }
    return out;
}

// (B . grad u)_k^s = sum_{l,j} B^{sj}_{kl} d_l u^j  (matrix 2-form against map gradient)
inline Field form2_times_grad(const Field& B, const Field& du) {
    const int m = du.channels;
    B.require(m * m, Rank::two, "form2_times_grad");
    du.require(m, Rank::one, "form2_times_grad");
    Field out(du.grid, m, Rank::one);
    const std::size_t np = du.points();
    for (int s = 0; s < m; ++s)
        for (int k = 0; k < 4; ++k) {
            double* dst = out.at(s, k);
            for (int l = 0; l < 4; ++l) {
                if (l == k) continue;
                const int pi = pair_index(std::min(k, l), std::max(k, l));
                const double sgn = pair_sign(k, l);
                for (int j = 0; j < m; ++j) {
                    const double* b = B.at(s * m + j, pi);
                    const double* d = du.at(j, l);
                    for (std::size_t p = 0; p < np; ++p) dst[p] += sgn * b[p] * d[p];
                }
            }
        }
    return out;
}

// Per spatial slot: out_l = M * V_l (matrix field times matrix-1-form).
inline Field mat_times_form(const Field& M, const Field& V) {
    const int m = ambient_dim_of_matrix(M, "mat_times_form");
    V.require(m * m, Rank::one, "mat_times_form");
    Field out(V.grid, m * m, Rank::one);
    const std::size_t np = V.points();
    for (int l = 0; l < 4; ++l)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double* dst = out.at(i * m + j, l);
                for (int k = 0; k < m; ++k) {
                    const double* a = M.at(i * m + k);
                    const double* b = V.at(k * m + j, l);
                    for (std::size_t p = 0; p < np; ++p) dst[p] += a[p] * b[p];
                }
            }
    return out;
}

// Per spatial slot: out_l = V_l * M.
inline Field form_times_mat(const Field& V, const Field& M) {
    const int m = ambient_dim_of_matrix(M, "form_times_mat");
    V.require(m * m, Rank::one, "form_times_mat");
    Field out(V.grid, m * m, Rank::one);
    const std::size_t np = V.points();
    for (int l = 0; l < 4; ++l)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double* dst = out.at(i * m + j, l);
                for (int k = 0; k < m; ++k) {
                    const double* a = V.at(i * m + k, l);
                    const double* b = M.at(k * m + j);
                    for (std::size_t p = 0; p < np; ++p) dst[p] += a[p] * b[p];
                }
            }
    return out;
}

// Broadcast multiply by a scalar field.
inline Field scale_by_scalar(const Field& s, const Field& f) {
    s.require(1, Rank::none, "scale_by_scalar");
    Field out = f;
    const std::size_t np = f.points();
    const double* sc = s.at(0);
    for (int c = 0; c < f.comps(); ++c) {
        double* d = out.comp(c);
        for (std::size_t p = 0; p < np; ++p) d[p] *= sc[p];
    }
    return out;
}

// sum over all components of f^2, as a scalar field.
inline Field pointwise_sqnorm(const Field& f) {
    Field out(f.grid, 1, Rank::none);
    const std::size_t np = f.points();
    double* dst = out.at(0);
    for (int c = 0; c < f.comps(); ++c) {
        const double* s = f.comp(c);
        for (std::size_t p = 0; p < np; ++p) dst[p] += s[p] * s[p];
    }
    return out;
}

// Dense exp(X) for a small m x m matrix, scaling and squaring with a Taylor
// core; fine for the so(m) exponents used here (norms well below 1 after
// scaling).
inline void dense_expm(const double* X, double* out, int m, double* work) {
    double* term = work;          // m*m
    double* acc = work + m * m;   // m*m
    double* xs = work + 2 * m * m; // scaled copy
    double nrm = 0.0;
    for (int i = 0; i < m * m; ++i) nrm += X[i] * X[i];
    nrm = std::sqrt(nrm);
    int s = 0;
    double sc = 1.0;
    while (nrm * sc > 0.25) { sc *= 0.5; ++s; }
    for (int i = 0; i < m * m; ++i) xs[i] = X[i] * sc;
    // exp(xs) by Taylor to machine precision
    std::memset(acc, 0, sizeof(double) * m * m);
    std::memset(term, 0, sizeof(double) * m * m);
    for (int i = 0; i < m; ++i) { acc[i * m + i] = 1.0; term[i * m + i] = 1.0; }
    double* tmp = out; // reuse as scratch for term * xs
    for (int k = 1; k <= 18; ++k) {
        std::memset(tmp, 0, sizeof(double) * m * m);
        for (int i = 0; i < m; ++i)
            for (int q = 0; q < m; ++q) {
                const double t = term[i * m + q];
                if (t == 0.0) continue;
                for (int j = 0; j < m; ++j) tmp[i * m + j] += t * xs[q * m + j];
            }
        const double inv = 1.0 / double(k);
        for (int i = 0; i < m * m; ++i) {
            term[i] = tmp[i] * inv;
            acc[i] += term[i];
        }
    }
    // undo scaling: square s times
    for (int r = 0; r < s; ++r) {
        std::memset(tmp, 0, sizeof(double) * m * m);
        for (int i = 0; i < m; ++i)
            for (int q = 0; q < m; ++q) {
                const double t = acc[i * m + q];
                for (int j = 0; j < m; ++j) tmp[i * m + j] += t * acc[q * m + j];
            }
        std::memcpy(acc, tmp, sizeof(double) * m * m);
    }
    std::memcpy(out, acc, sizeof(double) * m * m);
}

// Pointwise exp of a matrix field.
inline Field matrix_exp(const Field& U) {
    const int m = ambient_dim_of_matrix(U, "matrix_exp");
    Field out(U.grid, m * m, Rank::none);
    const std::size_t np = U.points();
    std::vector<double> x(m * m), y(m * m), work(3 * m * m);
    for (std::size_t p = 0; p < np; ++p) {
        for (int c = 0; c < m * m; ++c) x[c] = U.comp(c)[p];
        dense_expm(x.data(), y.data(), m, work.data());
        for (int c = 0; c < m * m; ++c) out.comp(c)[p] = y[c];
    }
    return out;
}

} // namespace biharm4
