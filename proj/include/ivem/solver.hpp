#pragma once

#include "assembly.hpp"

#include <Eigen/SparseCholesky>

#include <chrono>
#include <memory>

namespace ivem {

// A symmetric positive linear operation r -> z.
using Precond = std::function<VecX(const VecX&)>;

struct CGOptions {
    double rel_tol = 1e-8;
    int max_iter = 0;  // 0: 10 sqrt(n)
    bool keep_history = true;
};

struct CGResult {
    VecX x;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residuals;  // relative preconditioned residual per iteration
    std::vector<double> alpha, beta;
    double seconds = 0;

    // Extreme eigenvalues of the Lanczos matrix built from the CG coefficients.
    std::pair<double, double> ritz_extremes() const {
        const int k = static_cast<int>(alpha.size());
        if (k == 0) return {0, 0};
        VecX d(k), e(std::max(k - 1, 0));
        for (int j = 0; j < k; ++j) {
            d[j] = 1.0 / alpha[j] + (j > 0 ? beta[j - 1] / alpha[j - 1] : 0.0);
            if (j + 1 < k) e[j] = std::sqrt(beta[j]) / alpha[j];
        }
        if (k == 1) return {d[0], d[0]};
        Eigen::SelfAdjointEigenSolver<MatX> es;
        es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
        return {es.eigenvalues()[0], es.eigenvalues()[k - 1]};
    }
    double condition_estimate() const {
        auto [lo, hi] = ritz_extremes();
        return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    }
};

inline CGResult pcg(const SpMat& A, const VecX& b, const Precond& M = nullptr, CGOptions opt = {}, const VecX* x0 = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    const Index n = A.rows();
    if (b.size() != n || A.cols() != n) throw InvalidArgument("pcg: dimension mismatch");
    if (opt.max_iter <= 0) opt.max_iter = static_cast<int>(std::ceil(10 * std::sqrt(static_cast<double>(std::max<Index>(n, 1)))));
    CGResult res;
    res.x = x0 ? *x0 : VecX::Zero(n);
    VecX r = b - A * res.x;
    VecX z = M ? M(r) : r;
    double rz = r.dot(z);
    if (!std::isfinite(rz)) throw SolverError("pcg: non-finite residual");
    const double rz0 = rz;
    if (rz0 <= 0) {
        res.converged = true;
        return res;
    }
    VecX p = z, Ap(n);
    double beta_prev = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        Ap.noalias() = A * p;
        double pAp = p.dot(Ap);
        if (!std::isfinite(pAp)) throw SolverError("pcg: non-finite curvature");
        if (pAp <= 0) throw SolverError("pcg: matrix or preconditioner is not positive definite");
        double alpha = rz / pAp;
        res.x += alpha * p;
        r -= alpha * Ap;
        z = M ? M(r) : r;
        double rz_new = r.dot(z);
        if (!std::isfinite(rz_new)) throw SolverError("pcg: non-finite residual");
        double beta = rz_new / rz;
        res.alpha.push_back(alpha);
        res.beta.push_back(beta);
        res.iterations = it + 1;
        double rel = std::sqrt(std::max(rz_new, 0.0) / rz0);
        if (opt.keep_history) res.residuals.push_back(rel);
        rz = rz_new;
        if (rel <= opt.rel_tol) {
            res.converged = true;
            break;
        }
        p = z + beta * p;
        beta_prev = beta;
    }
    (void)beta_prev;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Smoothers. A is symmetric, so column k holds row k.

inline VecX jacobi_apply(const VecX& diag_inv, const VecX& r) { return diag_inv.cwiseProduct(r); }

inline VecX inverse_diagonal(const SpMat& A) {
    VecX d = A.diagonal();
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0)) throw SolverError("non-positive diagonal entry");
        d[i] = 1.0 / d[i];
    }
    return d;
}

// Symmetric Gauss-Seidel sweeps from a zero initial guess.
inline VecX sgs_apply(const SpMat& A, const VecX& diag_inv, const VecX& r, int sweeps = 1) {
    const Index n = A.rows();
    VecX x = VecX::Zero(n);
    auto relax = [&](Index i) {
        double s = r[i];
        for (SpMat::InnerIterator it(A, i); it; ++it)
            if (it.row() != i) s -= it.value() * x[it.row()];
        x[i] = s * diag_inv[i];
    };
    for (int k = 0; k < sweeps; ++k) {
        for (Index i = 0; i < n; ++i) relax(i);
        for (Index i = n - 1; i >= 0; --i) relax(i);
    }
    return x;
}

inline void gs_forward(const SpMat& A, const VecX& diag_inv, const VecX& r, VecX& x) {
    for (Index i = 0; i < A.rows(); ++i) {
        double s = r[i];
        for (SpMat::InnerIterator it(A, i); it; ++it)
            if (it.row() != i) s -= it.value() * x[it.row()];
        x[i] = s * diag_inv[i];
    }
}
inline void gs_backward(const SpMat& A, const VecX& diag_inv, const VecX& r, VecX& x) {
    for (Index i = A.rows() - 1; i >= 0; --i) {
        double s = r[i];
        for (SpMat::InnerIterator it(A, i); it; ++it)
            if (it.row() != i) s -= it.value() * x[it.row()];
        x[i] = s * diag_inv[i];
    }
}

// Sparse direct solve.
class DirectSolver {
public:
    DirectSolver() = default;
    explicit DirectSolver(const SpMat& A) { factor(A); }
    void factor(const SpMat& A) {
        n_ = A.rows();
        if (n_ == 0) return;
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(A);
        if (ldlt_->info() != Eigen::Success) throw ConfigError("sparse factorization failed");
        if ((ldlt_->vectorD().array() <= 0).any()) throw ConfigError("factorized matrix is not positive definite");
    }
    VecX solve(const VecX& r) const {
        if (n_ == 0) return VecX();
        return ldlt_->solve(r);
    }
    Index size() const { return n_; }

private:
    Index n_ = 0;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
};

// Smoothed-aggregation AMG with a symmetric V-cycle.
struct AMGOptions {
    double theta = 0.08;
    int max_levels = 10;
    Index coarse_size = 200;
};

class SmoothedAggregationAMG {
public:
    SmoothedAggregationAMG() = default;
    explicit SmoothedAggregationAMG(const SpMat& A, AMGOptions opt = {}) { setup(A, opt); }

    void setup(const SpMat& A, AMGOptions opt = {}) {
        levels_.clear();
        levels_.push_back({A, inverse_diagonal(A), SpMat()});
        while (static_cast<int>(levels_.size()) < opt.max_levels && levels_.back().A.rows() > opt.coarse_size) {
            auto& L = levels_.back();
            SpMat P = prolongator(L.A, L.dinv, opt.theta);
            if (P.cols() == 0 || P.cols() >= L.A.rows()) break;
            SpMat Ac = SpMat(P.transpose() * L.A * P);
            Ac.prune(0.0);
            L.P = P;
            levels_.push_back({Ac, inverse_diagonal(Ac), SpMat()});
        }
        coarse_ = DirectSolver(levels_.back().A);
    }

    VecX apply(const VecX& r) const { return cycle(0, r); }
    int num_levels() const { return static_cast<int>(levels_.size()); }
    Index level_size(int l) const { return levels_[l].A.rows(); }

private:
    struct Level {
        SpMat A;
        VecX dinv;
        SpMat P;
    };
    std::vector<Level> levels_;
    DirectSolver coarse_;

    VecX cycle(int l, const VecX& r) const {
        const auto& L = levels_[l];
        if (l + 1 == static_cast<int>(levels_.size())) return coarse_.solve(r);
        VecX x = VecX::Zero(r.size());
        gs_forward(L.A, L.dinv, r, x);
        VecX res = r - L.A * x;
        x += L.P * cycle(l + 1, L.P.transpose() * res);
        res = r - L.A * x;
        VecX y = x;
        // backward sweep continuing from x keeps the cycle symmetric
        for (Index i = L.A.rows() - 1; i >= 0; --i) {
            double s = r[i];
            for (SpMat::InnerIterator it(L.A, i); it; ++it)
                if (it.row() != i) s -= it.value() * y[it.row()];
            y[i] = s * L.dinv[i];
        }
        return y;
    }

    static SpMat prolongator(const SpMat& A, const VecX& dinv, double theta) {
        const Index n = A.rows();
        std::vector<std::vector<Index>> strong(n);
        VecX d = A.diagonal();
        for (Index j = 0; j < n; ++j)
            for (SpMat::InnerIterator it(A, j); it; ++it) {
                Index i = it.row();
                if (i != j && std::abs(it.value()) >= theta * std::sqrt(std::abs(d[i] * d[j]))) strong[j].push_back(i);
            }
        std::vector<Index> agg(n, -1);
        Index na = 0;
        for (Index i = 0; i < n; ++i) {
            if (agg[i] >= 0) continue;
            bool free = std::all_of(strong[i].begin(), strong[i].end(), [&](Index j) { return agg[j] < 0; });
            if (!free) continue;
            agg[i] = na;
            for (Index j : strong[i]) agg[j] = na;
            ++na;
        }
        for (Index i = 0; i < n; ++i) {
            if (agg[i] >= 0) continue;
            double best = -1;
            for (Index j : strong[i])
                if (agg[j] >= 0 && std::abs(A.coeff(i, j)) > best) {
                    best = std::abs(A.coeff(i, j));
                    agg[i] = -2 - agg[j];
                }
        }
        for (Index i = 0; i < n; ++i)
            if (agg[i] <= -2) agg[i] = -2 - agg[i];
        for (Index i = 0; i < n; ++i)
            if (agg[i] < 0) {
                agg[i] = na;
                for (Index j : strong[i])
                    if (agg[j] < 0) agg[j] = na;
                ++na;
            }
        std::vector<double> size(na, 0);
        for (Index i = 0; i < n; ++i) size[agg[i]] += 1;
        Triplets tr;
        for (Index i = 0; i < n; ++i) tr.emplace_back(i, agg[i], 1.0 / std::sqrt(size[agg[i]]));
        SpMat T(n, na);
        T.setFromTriplets(tr.begin(), tr.end());
        // spectral radius of D^-1 A by power iteration
        VecX v = VecX::Ones(n);
        double rho = 1;
        for (int k = 0; k < 20; ++k) {
            VecX w = dinv.cwiseProduct(A * v);
            rho = w.norm() / v.norm();
            v = w / w.norm();
        }
        double omega = 4.0 / 3.0 / rho;
        SpMat S = SpMat(dinv.asDiagonal() * A);
        SpMat P = SpMat(T - omega * SpMat(S * T));
        P.prune(1e-14, 1.0);
        return P;
    }
};

enum class AuxBackend { Direct, SGS, AMG };

inline std::string to_string(AuxBackend b) {
    switch (b) {
        case AuxBackend::Direct: return "direct";
        case AuxBackend::SGS: return "sgs";
        case AuxBackend::AMG: return "amg";
    }
    return "?";
}
inline AuxBackend parse_backend(const std::string& s) {
    if (s == "direct") return AuxBackend::Direct;
    if (s == "sgs") return AuxBackend::SGS;
    if (s == "amg") return AuxBackend::AMG;
    throw ConfigError("unknown auxiliary backend: " + s);
}

// A fixed symmetric positive approximation of A^-1.
class AuxSolver {
public:
    AuxSolver() = default;
    AuxSolver(const SpMat& A, AuxBackend kind, int sweeps = 2) : kind_(kind), sweeps_(sweeps), A_(A) {
        switch (kind) {
            case AuxBackend::Direct: direct_.factor(A); break;
            case AuxBackend::SGS: dinv_ = inverse_diagonal(A); break;
            case AuxBackend::AMG: amg_.setup(A); break;
        }
    }
    VecX solve(const VecX& r) const {
        if (A_.rows() == 0) return VecX();
        switch (kind_) {
            case AuxBackend::Direct: return direct_.solve(r);
            case AuxBackend::SGS: return sgs_apply(A_, dinv_, r, sweeps_);
            case AuxBackend::AMG: return amg_.apply(r);
        }
        return r;
    }

private:
    AuxBackend kind_ = AuxBackend::Direct;
    int sweeps_ = 2;
    SpMat A_;
    VecX dinv_;
    DirectSolver direct_;
    SmoothedAggregationAMG amg_;
};

// Interface DoF sets: D_1 holds the free edges of interface elements, D_{l+1} adds every
// edge touching a node of an edge in D_l.
inline std::vector<Index> interface_edge_set(const Topology& T, const std::vector<char>& is_free, int l) {
    std::vector<char> in(T.num_edges(), 0);
    if (l <= 0) return {};
    for (Index e : T.interface_elements)
        for (Index k : T.elem_edges[e]) in[k] = 1;
    for (int step = 1; step < l; ++step) {
        std::vector<char> node(T.num_nodes(), 0);
        for (Index k = 0; k < T.num_edges(); ++k)
            if (in[k]) node[T.edges[k][0]] = node[T.edges[k][1]] = 1;
        for (Index k = 0; k < T.num_edges(); ++k)
            if (node[T.edges[k][0]] || node[T.edges[k][1]]) in[k] = 1;
    }
    std::vector<Index> out;
    for (Index k = 0; k < T.num_edges(); ++k)
        if (in[k] && is_free[k]) out.push_back(k);
    return out;
}

enum class SmootherKind { SGS, Jacobi };

struct SmootherConfig {
    int l = 1;
    SmootherKind inner = SmootherKind::SGS;
    int sweeps = 1;
};

// Block-diagonal smoother: direct solve on the interface block, a classical smoother elsewhere.
class BlockSmoother {
public:
    BlockSmoother() = default;
    BlockSmoother(const SpMat& A, const std::vector<Index>& block, SmootherConfig cfg) : cfg_(cfg) {
        const Index n = A.rows();
        pos_.assign(n, -1);
        std::vector<char> inb(n, 0);
        for (Index i : block) inb[i] = 1;
        for (Index i = 0; i < n; ++i) {
            if (inb[i]) {
                pos_[i] = static_cast<Index>(I_.size());
                I_.push_back(i);
            } else {
                pos_[i] = static_cast<Index>(N_.size());
                N_.push_back(i);
            }
        }
        AI_ = extract(A, I_, inb, true);
        AN_ = extract(A, N_, inb, false);
        lu_.factor(AI_);
        dinv_ = AN_.rows() ? inverse_diagonal(AN_) : VecX();
    }

    VecX apply(const VecX& r) const {
        VecX z(r.size());
        if (!I_.empty()) {
            VecX rI(I_.size());
            for (size_t k = 0; k < I_.size(); ++k) rI[k] = r[I_[k]];
            VecX zI = lu_.solve(rI);
            for (size_t k = 0; k < I_.size(); ++k) z[I_[k]] = zI[k];
        }
        if (!N_.empty()) {
            VecX rN(N_.size());
            for (size_t k = 0; k < N_.size(); ++k) rN[k] = r[N_[k]];
            VecX zN = cfg_.inner == SmootherKind::SGS ? sgs_apply(AN_, dinv_, rN, cfg_.sweeps) : jacobi_apply(dinv_, rN);
            for (size_t k = 0; k < N_.size(); ++k) z[N_[k]] = zN[k];
        }
        return z;
    }
    Index block_size() const { return static_cast<Index>(I_.size()); }
    const SpMat& block_matrix() const { return AI_; }

private:
    SmootherConfig cfg_;
    std::vector<Index> I_, N_, pos_;
    SpMat AI_, AN_;
    DirectSolver lu_;
    VecX dinv_;

    SpMat extract(const SpMat& A, const std::vector<Index>& idx, const std::vector<char>& inb, bool want) const {
        Triplets tr;
        for (Index j : idx)
            for (SpMat::InnerIterator it(A, j); it; ++it)
                if (static_cast<bool>(inb[it.row()]) == want) tr.emplace_back(pos_[it.row()], pos_[j], it.value());
        SpMat S(idx.size(), idx.size());
        S.setFromTriplets(tr.begin(), tr.end());
        return S;
    }
};

// Restriction of a sparse matrix to selected rows and columns.
inline SpMat submatrix(const SpMat& A, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    std::vector<Index> rpos(A.rows(), -1), cpos(A.cols(), -1);
    for (size_t i = 0; i < rows.size(); ++i) rpos[rows[i]] = static_cast<Index>(i);
    for (size_t i = 0; i < cols.size(); ++i) cpos[cols[i]] = static_cast<Index>(i);
    Triplets tr;
    for (int k = 0; k < A.outerSize(); ++k) {
        if (cpos[k] < 0) continue;
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (rpos[it.row()] >= 0) tr.emplace_back(rpos[it.row()], cpos[k], it.value());
    }
    SpMat S(rows.size(), cols.size());
    S.setFromTriplets(tr.begin(), tr.end());
    return S;
}

struct HXConfig {
    SmootherConfig smoother;
    AuxBackend backend = AuxBackend::Direct;
    int aux_sweeps = 2;
};

// Auxiliary-space preconditioner R + P B_vec P^T + G B_grad G^T on the free edge DoFs.
class HXPreconditioner {
public:
    struct Diagnostics {
        double smoother = 0, vec = 0, grad = 0;  // norms of the three branch outputs, last call
    };

    HXPreconditioner(const LinearSystem& S, const Topology& T, const SchemeConfig& cfg, HXConfig hx = {}) : hx_(hx) {
        if (S.kind != DofKind::Edge) throw InvalidArgument("HX preconditioner needs an edge system");
        std::vector<char> edge_free(T.num_edges(), 0);
        for (Index e : S.free_dofs) edge_free[e] = 1;
        std::vector<Index> nodes;
        for (Index v = 0; v < T.num_nodes(); ++v)
            if (!T.node_boundary[v]) nodes.push_back(v);
        auto R = build_transfers(T);
        G_ = submatrix(R.G, S.free_dofs, nodes);
        const Index N = T.num_nodes();
        std::vector<Index> comp;
        for (int d = 0; d < 3; ++d)
            for (Index v : nodes) comp.push_back(d * N + v);
        P_ = submatrix(R.P, S.free_dofs, comp);
        nn_ = static_cast<Index>(nodes.size());

        const auto& k = cfg.coef;
        SpMat As = assemble_scalar(T, k.alpha_minus, k.alpha_plus, k.beta_minus, k.beta_plus, cfg.gamma);
        A_vec_ = submatrix(As, nodes, nodes);
        A_grad_ = SpMat(G_.transpose() * S.A * G_);
        A_grad_.prune(0.0);
        vec_ = AuxSolver(A_vec_, hx.backend, hx.aux_sweeps);
        grad_ = AuxSolver(A_grad_, hx.backend, hx.aux_sweeps);

        std::vector<Index> block;
        for (Index e : interface_edge_set(T, edge_free, hx.smoother.l)) block.push_back(S.free_index[e]);
        smoother_ = BlockSmoother(S.A, block, hx.smoother);
    }

    VecX apply(const VecX& r) const {
        VecX z = smoother_.apply(r);
        diag_.smoother = z.norm();
        VecX pr = P_.transpose() * r, pv(pr.size());
        for (int d = 0; d < 3; ++d) pv.segment(d * nn_, nn_) = vec_.solve(pr.segment(d * nn_, nn_));
        VecX zv = P_ * pv;
        VecX zg = G_ * grad_.solve(G_.transpose() * r);
        diag_.vec = zv.norm();
        diag_.grad = zg.norm();
        return z + zv + zg;
    }

    Precond as_precond() const {
        return [this](const VecX& r) { return apply(r); };
    }
    Index interface_block_size() const { return smoother_.block_size(); }
    const SpMat& interface_block() const { return smoother_.block_matrix(); }
    const SpMat& grad_operator() const { return A_grad_; }
    const SpMat& vec_operator() const { return A_vec_; }
    const Diagnostics& diagnostics() const { return diag_; }

private:
    HXConfig hx_;
    SpMat G_, P_, A_vec_, A_grad_;
    Index nn_ = 0;
    AuxSolver vec_, grad_;
    BlockSmoother smoother_;
    mutable Diagnostics diag_;
};

inline Precond jacobi_precond(const SpMat& A) {
    VecX d = inverse_diagonal(A);
    return [d](const VecX& r) { return jacobi_apply(d, r); };
}

inline Precond sgs_precond(const SpMat& A, int sweeps = 1) {
    VecX d = inverse_diagonal(A);
    return [A, d, sweeps](const VecX& r) { return sgs_apply(A, d, r, sweeps); };
}

// Iteration log as CSV.
inline void write_iteration_log(const std::string& path, const CGResult& r) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os << "iter,residual\n";
    os.precision(10);
    for (size_t i = 0; i < r.residuals.size(); ++i) os << i + 1 << "," << r.residuals[i] << "\n";
}

}  // namespace ivem
