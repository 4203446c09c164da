#include "mlbpgd/objectives.hpp"

#include <cmath>
#include <optional>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

enum class ObjKind { KLbAx, KLAxb, DDesign, LeastSquares };

// Both KL variants demand a componentwise-nonnegative operator with no dead
// row. A is nonnegative iff A*1 and |A|*1 agree: both sums visit entries in
// the same order, so for nonnegative entries they are bitwise equal, while a
// mixed-sign row leaves a gap of at least twice the negative mass.
void check_kl_operator(const LinearOperatorHandle& a) {
    GridVector ones(static_cast<std::size_t>(a.cols()), 1.0);
    GridVector plain = a.apply_serial(ones);
    GridVector absolute = a.abs_row_sums();
    for (std::size_t i = 0; i < absolute.size(); ++i) {
        if (absolute[i] == 0.0)
            throw ArgError("KL objective: operator has a zero row");
        if (plain[i] != absolute[i])
            throw ArgError("KL objective: operator has negative entries");
    }
}

void check_positive_data(const GridVector& b) {
    for (double v : b.data)
        if (!(v > 0.0) || !std::isfinite(v))
            throw ArgError("KL objective: data vector must be strictly positive");
}

} // namespace

struct Objective::Impl {
    ObjKind kind;
    std::optional<LinearOperatorHandle> a;  // KL and least-squares variants
    GridVector b;
    Eigen::MatrixXd h;                      // d_design only, m x n
    double smoothness = 0.0;
    std::size_t dim = 0;
};

Objective Objective::kl_b_ax(LinearOperatorHandle a, GridVector b) {
    if (static_cast<std::size_t>(a.rows()) != b.size())
        throw ShapeError("kl_b_ax: data length must match operator rows");
    check_positive_data(b);
    check_kl_operator(a);
    auto impl = std::make_shared<Impl>();
    impl->kind = ObjKind::KLbAx;
    impl->dim = static_cast<std::size_t>(a.cols());
    impl->a = std::move(a);
    impl->smoothness = sum(b);
    impl->b = std::move(b);
    return Objective(std::move(impl));
}

Objective Objective::kl_ax_b(LinearOperatorHandle a, GridVector b) {
    if (static_cast<std::size_t>(a.rows()) != b.size())
        throw ShapeError("kl_ax_b: data length must match operator rows");
    check_positive_data(b);
    check_kl_operator(a);
    auto impl = std::make_shared<Impl>();
    impl->kind = ObjKind::KLAxb;
    impl->dim = static_cast<std::size_t>(a.cols());
    impl->smoothness = a.max_abs_col_sum();
    impl->a = std::move(a);
    impl->b = std::move(b);
    return Objective(std::move(impl));
}

Objective Objective::d_design(LinearOperatorHandle h) {
    const int m = h.rows();
    const int n = h.cols();
    if (n < m)
        throw ArgError("d_design: need at least as many columns as rows");
    std::vector<double> entries = h.dense_entries();
    auto impl = std::make_shared<Impl>();
    impl->kind = ObjKind::DDesign;
    impl->dim = static_cast<std::size_t>(n);
    impl->smoothness = 1.0;
    impl->h = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(entries.data(), m, n);
    return Objective(std::move(impl));
}

Objective Objective::least_squares(LinearOperatorHandle a, GridVector b) {
    if (static_cast<std::size_t>(a.rows()) != b.size())
        throw ShapeError("least_squares: data length must match operator rows");
    auto impl = std::make_shared<Impl>();
    impl->kind = ObjKind::LeastSquares;
    impl->dim = static_cast<std::size_t>(a.cols());
    impl->a = std::move(a);
    impl->b = std::move(b);
    return Objective(std::move(impl));
}

namespace {

void check_arg(const Objective::Impl& impl, const GridVector& x, const char* where) {
    if (x.size() != impl.dim)
        throw ShapeError(std::string(where) + ": argument size mismatch");
}

// Factorizes M(x) = H Diag(x) H^T. Non-finite products are reported as
// SingularError, an indefinite matrix as DomainError.
Eigen::LLT<Eigen::MatrixXd> ddesign_factor(const Eigen::MatrixXd& h, const GridVector& x) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::MatrixXd weighted = h * xv.asDiagonal();
    Eigen::MatrixXd info(h.rows(), h.rows());
    info.noalias() = weighted * h.transpose();
    if (!info.allFinite())
        throw SingularError("d_design: information matrix has non-finite entries");
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success)
        throw DomainError("d_design: information matrix is not positive definite");
    return llt;
}

double ddesign_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < llt.matrixLLT().rows(); ++i) {
        const double lii = llt.matrixLLT()(i, i);
        if (!(lii > 0.0) || !std::isfinite(lii))
            throw SingularError("d_design: factorization produced a bad pivot");
        log_det += std::log(lii);
    }
    return 2.0 * log_det;
}

GridVector kl_forward(const Objective::Impl& impl, const GridVector& x) {
    GridVector t = impl.a->apply(x);
    for (double v : t.data)
        if (v < 0.0 || !std::isfinite(v))
            throw DomainError("KL objective: forward projection left the domain");
    return t;
}

} // namespace

double Objective::value(const GridVector& x) const {
    const Impl& impl = *impl_;
    check_arg(impl, x, "value");
    switch (impl.kind) {
        case ObjKind::KLbAx: {
            GridVector t = kl_forward(impl, x);
            double s = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i] <= 0.0)
                    throw DomainError("kl_b_ax: zero forward projection against positive data");
                s += impl.b[i] * std::log(impl.b[i] / t[i]) - impl.b[i] + t[i];
            }
            return s;
        }
        case ObjKind::KLAxb: {
            GridVector t = kl_forward(impl, x);
            double s = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                // 0 ln 0 = 0: a ray with zero predicted counts contributes b_i.
                if (t[i] > 0.0) s += t[i] * std::log(t[i] / impl.b[i]);
                s += impl.b[i] - t[i];
            }
            return s;
        }
        case ObjKind::DDesign:
            return -ddesign_log_det(ddesign_factor(impl.h, x));
        case ObjKind::LeastSquares: {
            GridVector r = sub(impl.a->apply(x), impl.b);
            return 0.5 * dot(r, r);
        }
    }
    throw Error("value: unreachable");
}

ObjEval Objective::eval_grad(const GridVector& x) const {
    const Impl& impl = *impl_;
    check_arg(impl, x, "eval_grad");
    switch (impl.kind) {
        case ObjKind::KLbAx: {
            GridVector t = kl_forward(impl, x);
            double s = 0.0;
            GridVector ratio(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i] <= 0.0)
                    throw DomainError("kl_b_ax: zero forward projection against positive data");
                s += impl.b[i] * std::log(impl.b[i] / t[i]) - impl.b[i] + t[i];
                ratio[i] = 1.0 - impl.b[i] / t[i];
            }
            return {s, impl.a->apply_adjoint(ratio)};
        }
        case ObjKind::KLAxb: {
            GridVector t = kl_forward(impl, x);
            double s = 0.0;
            GridVector lr(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i] <= 0.0)
                    throw DomainError("kl_ax_b: gradient needs strictly positive projections");
                const double l = std::log(t[i] / impl.b[i]);
                s += t[i] * l;
                s += impl.b[i] - t[i];
                lr[i] = l;
            }
            return {s, impl.a->apply_adjoint(lr)};
        }
        case ObjKind::DDesign: {
            Eigen::LLT<Eigen::MatrixXd> llt = ddesign_factor(impl.h, x);
            const double val = -ddesign_log_det(llt);
            // grad_i = -h_i^T M^{-1} h_i = -||L^{-1} h_i||^2, batched over columns.
            Eigen::MatrixXd solved =
                llt.matrixL().solve(impl.h);
            GridVector g(impl.dim);
            for (std::size_t i = 0; i < impl.dim; ++i)
                g[i] = -solved.col(static_cast<Eigen::Index>(i)).squaredNorm();
            return {val, std::move(g)};
        }
        case ObjKind::LeastSquares: {
            GridVector r = sub(impl.a->apply(x), impl.b);
            return {0.5 * dot(r, r), impl.a->apply_adjoint(r)};
        }
    }
    throw Error("eval_grad: unreachable");
}

double Objective::smoothness_constant() const {
    if (impl_->kind == ObjKind::LeastSquares)
        throw UnsupportedError("least_squares carries no relative-smoothness constant");
    return impl_->smoothness;
}

std::size_t Objective::dim() const { return impl_->dim; }

CoarseModel::CoarseModel(Objective base, GridVector shift, GridVector anchor)
    : base_(std::move(base)), shift_(std::move(shift)), anchor_(std::move(anchor)) {
    if (shift_.size() != base_.dim() || anchor_.size() != base_.dim())
        throw ShapeError("coarse model: shift and anchor must match the base dimension");
}

ObjEval CoarseModel::eval_grad(const GridVector& x) const {
    ObjEval e = base_.eval_grad(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        e.value += shift_[i] * (x[i] - anchor_[i]);
        e.grad[i] += shift_[i];
    }
    return e;
}

double CoarseModel::value(const GridVector& x) const {
    double v = base_.value(x);
    for (std::size_t i = 0; i < x.size(); ++i) v += shift_[i] * (x[i] - anchor_[i]);
    return v;
}

CoarseModel build_coarse_model(const Objective& base, const GridVector& target_grad,
                               const GridVector& anchor) {
    if (target_grad.size() != base.dim() || anchor.size() != base.dim())
        throw ShapeError("build_coarse_model: dimension mismatch");
    GridVector v = sub(target_grad, base.eval_grad(anchor).grad);
    return CoarseModel(base, std::move(v), anchor);
}

double ModelView::value(const GridVector& x) const {
    if (std::holds_alternative<const Objective*>(ref_))
        return std::get<const Objective*>(ref_)->value(x);
    return std::get<const CoarseModel*>(ref_)->value(x);
}

ObjEval ModelView::eval_grad(const GridVector& x) const {
    if (std::holds_alternative<const Objective*>(ref_))
        return std::get<const Objective*>(ref_)->eval_grad(x);
    return std::get<const CoarseModel*>(ref_)->eval_grad(x);
}

std::size_t ModelView::dim() const {
    if (std::holds_alternative<const Objective*>(ref_))
        return std::get<const Objective*>(ref_)->dim();
    return std::get<const CoarseModel*>(ref_)->dim();
}

} // namespace mlbpgd
