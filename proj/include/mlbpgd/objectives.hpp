#pragma once

#include <memory>
#include <variant>

#include "mlbpgd/grid_vector.hpp"
#include "mlbpgd/linops.hpp"

namespace mlbpgd {

struct ObjEval {
    double value;
    GridVector grad;
};

// The four objective variants the solver can minimize. Immutable; eval_grad
// and value are pure, so evaluations are thread-safe and repeatable.
class Objective {
public:
    // sum_i b_i ln(b_i / (Ax)_i) - b_i + (Ax)_i, the Poisson likelihood fit.
    static Objective kl_b_ax(LinearOperatorHandle a, GridVector b);
    // sum_i (Ax)_i ln((Ax)_i / b_i) - (Ax)_i + b_i, divergence order swapped.
    static Objective kl_ax_b(LinearOperatorHandle a, GridVector b);
    // -ln det(H Diag(x) H^T) for a dense m x n operator H with n >= m.
    static Objective d_design(LinearOperatorHandle h);
    // 1/2 || Ax - b ||^2; no smoothness constant, step supplied externally.
    static Objective least_squares(LinearOperatorHandle a, GridVector b);

    ObjEval eval_grad(const GridVector& x) const;
    double value(const GridVector& x) const;

    // Relative-smoothness constant against the variant's natural geometry:
    // ||b||_1 for kl_b_ax, induced 1-norm of A for kl_ax_b, 1 for d_design.
    double smoothness_constant() const;

    std::size_t dim() const;

    struct Impl;

private:
    explicit Objective(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Coarse-level surrogate psi(x) = f(x) + <v, x - anchor> with the shift v
// chosen so grad psi(anchor) equals a prescribed target gradient.
class CoarseModel {
public:
    CoarseModel(Objective base, GridVector shift, GridVector anchor);

    ObjEval eval_grad(const GridVector& x) const;
    double value(const GridVector& x) const;
    double smoothness_constant() const { return base_.smoothness_constant(); }
    std::size_t dim() const { return base_.dim(); }

    const Objective& base() const { return base_; }
    const GridVector& shift() const { return shift_; }
    const GridVector& anchor() const { return anchor_; }

private:
    Objective base_;
    GridVector shift_, anchor_;
};

// Builds the surrogate for one coarse visit: target_grad is the restricted
// parent gradient, anchor the restricted parent iterate. By construction
// grad psi(anchor) = target_grad up to rounding in the additions.
CoarseModel build_coarse_model(const Objective& base, const GridVector& target_grad,
                               const GridVector& anchor);

// Non-owning view letting the solver treat objectives and coarse surrogates
// uniformly. The referenced model must outlive the view.
class ModelView {
public:
    ModelView(const Objective& f) : ref_(&f) {}
    ModelView(const CoarseModel& m) : ref_(&m) {}

    double value(const GridVector& x) const;
    ObjEval eval_grad(const GridVector& x) const;
    std::size_t dim() const;

private:
    std::variant<const Objective*, const CoarseModel*> ref_;
};

} // namespace mlbpgd
