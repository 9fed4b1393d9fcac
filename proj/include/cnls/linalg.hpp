// Matrix-free Krylov solvers on flat coefficient vectors.  All reductions are
// ordered loops so results are bit-reproducible.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cnls {

using Vec = std::vector<double>;

inline double vdot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double vnorm(const Vec& a) { return std::sqrt(vdot(a, a)); }

inline void vaxpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

struct KrylovStats {
    int iterations = 0;
    double rel_residual = 0.0;
};

// Conjugate gradients for symmetric positive definite operators.
template <class MatVec>
KrylovStats cg_solve(MatVec&& A, const Vec& b, Vec& x, double rtol, int maxit) {
    x.assign(b.size(), 0.0);
    Vec r = b;
    Vec p = r;
    Vec Ap(b.size());
    double rr = vdot(r, r);
    const double b0 = std::sqrt(rr);
    KrylovStats st;
    if (b0 == 0.0) return st;
    for (int it = 0; it < maxit; ++it) {
        A(p, Ap);
        const double pAp = vdot(p, Ap);
        if (pAp <= 0.0) break;  // lost positivity; return best iterate
        const double alpha = rr / pAp;
        vaxpy(alpha, p, x);
        vaxpy(-alpha, Ap, r);
        const double rr2 = vdot(r, r);
        st.iterations = it + 1;
        st.rel_residual = std::sqrt(rr2) / b0;
        if (st.rel_residual < rtol) return st;
        const double beta = rr2 / rr;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        rr = rr2;
    }
    return st;
}

// MINRES for symmetric (possibly indefinite) operators, three-term
// conjugate-residual recurrence.
template <class MatVec>
KrylovStats minres_solve(MatVec&& A, const Vec& b, Vec& x, double rtol, int maxit) {
    const std::size_t n = b.size();
    x.assign(n, 0.0);
    Vec r = b;
    const double b0 = vnorm(b);
    KrylovStats st;
    if (b0 == 0.0) return st;

    Vec p0 = r, p1(n, 0.0), p2(n, 0.0);
    Vec s0(n), s1(n, 0.0), s2(n, 0.0);
    A(p0, s0);
    for (int it = 0; it < maxit; ++it) {
        p2 = p1; p1 = p0;
        s2 = s1; s1 = s0;
        const double ss = vdot(s1, s1);
        if (!(ss > 0.0)) break;
        const double alpha = vdot(r, s1) / ss;
        vaxpy(alpha, p1, x);
        vaxpy(-alpha, s1, r);
        st.iterations = it + 1;
        st.rel_residual = vnorm(r) / b0;
        if (st.rel_residual < rtol) return st;
        p0 = s1;
        A(s1, s0);
        const double beta1 = vdot(s0, s1) / ss;
        vaxpy(-beta1, p1, p0);
        vaxpy(-beta1, s1, s0);
        if (it > 0) {
            const double ss2 = vdot(s2, s2);
            if (ss2 > 0.0) {
                const double beta2 = vdot(s0, s2) / ss2;
                vaxpy(-beta2, p2, p0);
                vaxpy(-beta2, s2, s0);
            }
        }
        // rescale the direction pair: the recurrence otherwise grows by a
        // factor of ||A|| per iteration and overflows on stiff operators
        const double ns = vnorm(s0);
        if (!(ns > 0.0)) break;
        const double inv = 1.0 / ns;
        for (std::size_t i = 0; i < n; ++i) {
            p0[i] *= inv;
            s0[i] *= inv;
        }
    }
    return st;
}

}  // namespace cnls
