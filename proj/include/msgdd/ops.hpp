#ifndef MSGDD_OPS_HPP
#define MSGDD_OPS_HPP

#include "msgdd/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msgdd {

template <typename Scalar>
using VectorXT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

// SAME padding: out = extent / stride, pad split floor/ceil (extra pad goes to
// the bottom/right). Requires the extent to be divisible by the stride.
struct ConvGeometry {
    int out_h = 0, out_w = 0;
    int pad_top = 0, pad_left = 0;
};

inline ConvGeometry conv_same_geometry(int h, int w, int kernel, int stride) {
    if (h % stride != 0 || w % stride != 0)
        throw Error("autodiff", "conv input " + std::to_string(h) + "x" + std::to_string(w) +
                                    " not divisible by stride " + std::to_string(stride));
    ConvGeometry g;
    g.out_h = h / stride;
    g.out_w = w / stride;
    g.pad_top = std::max((g.out_h - 1) * stride + kernel - h, 0) / 2;
    g.pad_left = std::max((g.out_w - 1) * stride + kernel - w, 0) / 2;
    return g;
}

namespace detail {

// cols is (out_h*out_w) x (c_in*k*k), column-major, so each patch-position row
// r = (c*k + ky)*k + kx is a contiguous column written in output-pixel order.
template <typename Scalar>
void im2col(const Scalar* x, int c_in, int h, int w, int kernel, int stride,
            const ConvGeometry& g, MatrixX<Scalar>& cols) {
    const Eigen::Index patch_count = static_cast<Eigen::Index>(g.out_h) * g.out_w;
    cols.setZero();
    for (int c = 0; c < c_in; ++c) {
        const Scalar* plane = x + static_cast<size_t>(c) * h * w;
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                Scalar* col = cols.data() + static_cast<size_t>((c * kernel + ky) * kernel + kx) * patch_count;
                const int ix_off = kx - g.pad_left;
                int ox_lo = ix_off < 0 ? (-ix_off + stride - 1) / stride : 0;
                int ox_hi = ix_off > w - 1 ? -1 : (w - 1 - ix_off) / stride;
                ox_hi = std::min(ox_hi, g.out_w - 1);
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * stride + ky - g.pad_top;
                    if (iy < 0 || iy >= h) continue;
                    const Scalar* src = plane + static_cast<size_t>(iy) * w;
                    Scalar* dst = col + static_cast<size_t>(oy) * g.out_w;
                    for (int ox = ox_lo; ox <= ox_hi; ++ox) dst[ox] = src[ox * stride + ix_off];
                }
            }
        }
    }
}

// Scatter-add of the cols layout back onto the (padded) input plane.
template <typename Scalar>
void col2im_add(const MatrixX<Scalar>& cols, int c_in, int h, int w, int kernel, int stride,
                const ConvGeometry& g, Scalar* dx) {
    const Eigen::Index patch_count = static_cast<Eigen::Index>(g.out_h) * g.out_w;
    for (int c = 0; c < c_in; ++c) {
        Scalar* plane = dx + static_cast<size_t>(c) * h * w;
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const Scalar* col =
                    cols.data() + static_cast<size_t>((c * kernel + ky) * kernel + kx) * patch_count;
                const int ix_off = kx - g.pad_left;
                int ox_lo = ix_off < 0 ? (-ix_off + stride - 1) / stride : 0;
                int ox_hi = ix_off > w - 1 ? -1 : (w - 1 - ix_off) / stride;
                ox_hi = std::min(ox_hi, g.out_w - 1);
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * stride + ky - g.pad_top;
                    if (iy < 0 || iy >= h) continue;
                    Scalar* dst = plane + static_cast<size_t>(iy) * w;
                    const Scalar* src = col + static_cast<size_t>(oy) * g.out_w;
                    for (int ox = ox_lo; ox <= ox_hi; ++ox) dst[ox * stride + ix_off] += src[ox];
                }
            }
        }
    }
}

} // namespace detail

// 2-D convolution, SAME padding, NCHW activations. Weights are stored flat as
// a column-major (c_in*k*k) x c_out matrix; bias has c_out entries. Per-sample
// im2col + GEMM; the patch matrix is rebuilt in the backward pass instead of
// being cached.
template <typename Scalar>
Var conv2d(Tape<Scalar>& t, Var x, Var w, Var b, int kernel, int stride) {
    const Shape xs = t.shape(x);
    const Shape ws = t.shape(w); // {c_out, c_in, k, k}
    if (ws.c != xs.c)
        throw Error("autodiff", "conv weight expects " + std::to_string(ws.c) +
                                    " input channels, got " + std::to_string(xs.c));
    if (ws.h != kernel || ws.w != kernel) throw Error("autodiff", "conv weight kernel mismatch");
    const ConvGeometry g = conv_same_geometry(xs.h, xs.w, kernel, stride);
    const Shape ys{xs.n, ws.n, g.out_h, g.out_w};
    const bool needs_grad = t.requires_grad(x) || t.requires_grad(w) || t.requires_grad(b);
    Var y = t.alloc(ys, needs_grad);

    const int c_in = xs.c, c_out = ws.n;
    const Eigen::Index patch_count = static_cast<Eigen::Index>(g.out_h) * g.out_w;
    const Eigen::Index patch_len = static_cast<Eigen::Index>(c_in) * kernel * kernel;
    const bool pointwise = (kernel == 1 && stride == 1);

    {
        const ArrayX<Scalar>& xv = t.val(x);
        const ArrayX<Scalar>& wv = t.val(w);
        const ArrayX<Scalar>& bv = t.val(b);
        ArrayX<Scalar>& yv = t.val(y);
        Eigen::Map<const MatrixX<Scalar>> wm(wv.data(), patch_len, c_out);
#pragma omp parallel for schedule(static)
        for (int n = 0; n < xs.n; ++n) {
            Eigen::Map<MatrixX<Scalar>> ym(yv.data() + n * ys.per_sample(), patch_count, c_out);
            if (pointwise) {
                Eigen::Map<const MatrixX<Scalar>> xm(xv.data() + n * xs.per_sample(), patch_count, c_in);
                ym.noalias() = xm * wm;
            } else {
                MatrixX<Scalar> cols(patch_count, patch_len);
                detail::im2col(xv.data() + n * xs.per_sample(), c_in, xs.h, xs.w, kernel, stride, g, cols);
                ym.noalias() = cols * wm;
            }
            ym.rowwise() += Eigen::Map<const VectorXT<Scalar>>(bv.data(), c_out).transpose();
        }
    }

    if (needs_grad) {
        t.set_backprop(y, [x, w, b, y, xs, ys, g, kernel, stride, c_in, c_out, patch_count,
                           patch_len, pointwise](Tape<Scalar>& tt) {
            const bool need_dx = tt.requires_grad(x);
            const bool need_dw = tt.requires_grad(w);
            const bool need_db = tt.requires_grad(b);
            const ArrayX<Scalar>& xv = tt.val(x);
            const ArrayX<Scalar>& dyv = tt.grad(y);
            Eigen::Map<const MatrixX<Scalar>> wm(tt.val(w).data(), patch_len, c_out);

            std::vector<MatrixX<Scalar>> dw_part(need_dw ? xs.n : 0);
            std::vector<VectorXT<Scalar>> db_part(need_db ? xs.n : 0);
            ArrayX<Scalar>* dxv = need_dx ? &tt.grad(x) : nullptr;

#pragma omp parallel for schedule(static)
            for (int n = 0; n < xs.n; ++n) {
                Eigen::Map<const MatrixX<Scalar>> dym(dyv.data() + n * ys.per_sample(), patch_count, c_out);
                if (need_db) db_part[n] = dym.colwise().sum().transpose();
                if (pointwise) {
                    Eigen::Map<const MatrixX<Scalar>> xm(xv.data() + n * xs.per_sample(), patch_count, c_in);
                    if (need_dw) dw_part[n].noalias() = xm.transpose() * dym;
                    if (need_dx) {
                        Eigen::Map<MatrixX<Scalar>> dxm(dxv->data() + n * xs.per_sample(), patch_count, c_in);
                        dxm.noalias() += dym * wm.transpose();
                    }
                } else {
                    MatrixX<Scalar> cols(patch_count, patch_len);
                    detail::im2col(xv.data() + n * xs.per_sample(), c_in, xs.h, xs.w, kernel, stride, g, cols);
                    if (need_dw) dw_part[n].noalias() = cols.transpose() * dym;
                    if (need_dx) {
                        MatrixX<Scalar> dcols(patch_count, patch_len);
                        dcols.noalias() = dym * wm.transpose();
                        detail::col2im_add(dcols, c_in, xs.h, xs.w, kernel, stride, g,
                                           dxv->data() + n * xs.per_sample());
                    }
                }
            }
            // Parameter gradients are reduced serially in sample order so
            // results do not depend on the thread count.
            if (need_dw) {
                Eigen::Map<MatrixX<Scalar>> dwm(tt.grad(w).data(), patch_len, c_out);
                for (int n = 0; n < xs.n; ++n) dwm.noalias() += dw_part[n];
            }
            if (need_db) {
                Eigen::Map<VectorXT<Scalar>> dbm(tt.grad(b).data(), c_out);
                for (int n = 0; n < xs.n; ++n) dbm.noalias() += db_part[n];
            }
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

// Instance norm, no affine terms: each (sample, channel) plane is centered and
// scaled to unit variance over its spatial extent.
template <typename Scalar>
Var instance_norm(Tape<Scalar>& t, Var x, Scalar eps = Scalar(1e-5)) {
    const Shape s = t.shape(x);
    const bool needs_grad = t.requires_grad(x);
    Var y = t.alloc(s, needs_grad);
    const Eigen::Index plane = static_cast<Eigen::Index>(s.h) * s.w;
    const Eigen::Index plane_count = static_cast<Eigen::Index>(s.n) * s.c;

    auto inv_std = std::make_shared<ArrayX<Scalar>>(plane_count);
    {
        const ArrayX<Scalar>& xv = t.val(x);
        ArrayX<Scalar>& yv = t.val(y);
        for (Eigen::Index p = 0; p < plane_count; ++p) {
            auto seg = xv.segment(p * plane, plane);
            const Scalar mu = seg.mean();
            const Scalar var = (seg - mu).square().mean();
            const Scalar inv = Scalar(1) / std::sqrt(var + eps);
            (*inv_std)[p] = inv;
            yv.segment(p * plane, plane) = (seg - mu) * inv;
        }
    }
    if (needs_grad) {
        t.set_backprop(y, [x, y, plane, plane_count, inv_std](Tape<Scalar>& tt) {
            const ArrayX<Scalar>& yv = tt.val(y);
            const ArrayX<Scalar>& dyv = tt.grad(y);
            ArrayX<Scalar>& dxv = tt.grad(x);
            for (Eigen::Index p = 0; p < plane_count; ++p) {
                auto dy = dyv.segment(p * plane, plane);
                auto yn = yv.segment(p * plane, plane);
                const Scalar mean_dy = dy.mean();
                const Scalar mean_dyy = (dy * yn).mean();
                dxv.segment(p * plane, plane) += (*inv_std)[p] * (dy - mean_dy - yn * mean_dyy);
            }
        });
    }
    return y;
}

// Persistent batch-norm statistics, owned by the model (not by any tape).
template <typename Scalar>
struct BatchNormState {
    ArrayX<Scalar> running_mean;
    ArrayX<Scalar> running_var;

    void init(int channels) {
        running_mean = ArrayX<Scalar>::Zero(channels);
        running_var = ArrayX<Scalar>::Ones(channels);
    }
};

struct NormMode {
    bool training = true;
    bool update_running = true; // frozen during gradient probes / finite differences
};

// Batch norm with affine terms. Training mode normalizes with batch statistics
// (biased variance), evaluation mode with the running ones; the running update
// stores the unbiased variance, matching common framework behaviour.
template <typename Scalar>
Var batch_norm(Tape<Scalar>& t, Var x, Var gamma, Var beta, BatchNormState<Scalar>* state,
               const NormMode& mode, Scalar momentum = Scalar(0.1), Scalar eps = Scalar(1e-5)) {
    const Shape s = t.shape(x);
    const int channels = s.c;
    if (t.shape(gamma).count() != channels || t.shape(beta).count() != channels)
        throw Error("autodiff", "batch_norm affine parameter size mismatch");
    const bool needs_grad = t.requires_grad(x) || t.requires_grad(gamma) || t.requires_grad(beta);
    Var y = t.alloc(s, needs_grad);

    const Eigen::Index plane = static_cast<Eigen::Index>(s.h) * s.w;
    const Eigen::Index per_sample = s.per_sample();
    const Eigen::Index count = static_cast<Eigen::Index>(s.n) * plane;

    auto mean = std::make_shared<ArrayX<Scalar>>(channels);
    auto inv_std = std::make_shared<ArrayX<Scalar>>(channels);
    {
        const ArrayX<Scalar>& xv = t.val(x);
        ArrayX<Scalar>& yv = t.val(y);
        const ArrayX<Scalar>& gv = t.val(gamma);
        const ArrayX<Scalar>& bv = t.val(beta);
        for (int c = 0; c < channels; ++c) {
            Scalar mu, var;
            if (mode.training) {
                Scalar sum = 0;
                for (int n = 0; n < s.n; ++n)
                    sum += xv.segment(n * per_sample + c * plane, plane).sum();
                mu = sum / Scalar(count);
                Scalar sq = 0;
                for (int n = 0; n < s.n; ++n)
                    sq += (xv.segment(n * per_sample + c * plane, plane) - mu).square().sum();
                var = sq / Scalar(count);
                if (mode.update_running && state) {
                    const Scalar unbiased = count > 1 ? var * Scalar(count) / Scalar(count - 1) : var;
                    state->running_mean[c] = (Scalar(1) - momentum) * state->running_mean[c] + momentum * mu;
                    state->running_var[c] = (Scalar(1) - momentum) * state->running_var[c] + momentum * unbiased;
                }
            } else {
                if (!state) throw Error("autodiff", "batch_norm eval mode needs running statistics");
                mu = state->running_mean[c];
                var = state->running_var[c];
            }
            const Scalar inv = Scalar(1) / std::sqrt(var + eps);
            (*mean)[c] = mu;
            (*inv_std)[c] = inv;
            for (int n = 0; n < s.n; ++n) {
                auto seg = xv.segment(n * per_sample + c * plane, plane);
                yv.segment(n * per_sample + c * plane, plane) = ((seg - mu) * inv) * gv[c] + bv[c];
            }
        }
    }

    if (needs_grad) {
        const bool training = mode.training;
        t.set_backprop(y, [x, y, gamma, beta, s, plane, per_sample, count, channels, mean, inv_std,
                           training](Tape<Scalar>& tt) {
            const ArrayX<Scalar>& xv = tt.val(x);
            const ArrayX<Scalar>& dyv = tt.grad(y);
            const ArrayX<Scalar>& gv = tt.val(gamma);
            const bool need_dx = tt.requires_grad(x);
            const bool need_dgamma = tt.requires_grad(gamma);
            const bool need_dbeta = tt.requires_grad(beta);
            for (int c = 0; c < channels; ++c) {
                const Scalar mu = (*mean)[c];
                const Scalar inv = (*inv_std)[c];
                Scalar sum_dy = 0, sum_dyxh = 0;
                for (int n = 0; n < s.n; ++n) {
                    auto dy = dyv.segment(n * per_sample + c * plane, plane);
                    auto xh = (xv.segment(n * per_sample + c * plane, plane) - mu) * inv;
                    sum_dy += dy.sum();
                    sum_dyxh += (dy * xh).sum();
                }
                if (need_dgamma) tt.grad(gamma)[c] += sum_dyxh;
                if (need_dbeta) tt.grad(beta)[c] += sum_dy;
                if (!need_dx) continue;
                ArrayX<Scalar>& dxv = tt.grad(x);
                if (training) {
                    const Scalar mean_dy = sum_dy / Scalar(count);
                    const Scalar mean_dyxh = sum_dyxh / Scalar(count);
                    for (int n = 0; n < s.n; ++n) {
                        auto dy = dyv.segment(n * per_sample + c * plane, plane);
                        auto xh = (xv.segment(n * per_sample + c * plane, plane) - mu) * inv;
                        dxv.segment(n * per_sample + c * plane, plane) +=
                            gv[c] * inv * (dy - mean_dy - xh * mean_dyxh);
                    }
                } else {
                    for (int n = 0; n < s.n; ++n)
                        dxv.segment(n * per_sample + c * plane, plane) +=
                            gv[c] * inv * dyv.segment(n * per_sample + c * plane, plane);
                }
            }
        });
    }
    return y;
}

// ---------------------------------------------------------------------------
// activations and layout ops
// ---------------------------------------------------------------------------

template <typename Scalar>
Var relu(Tape<Scalar>& t, Var x) {
    const Shape s = t.shape(x);
    const bool needs_grad = t.requires_grad(x);
    Var y = t.alloc(s, needs_grad);
    t.val(y) = t.val(x).max(Scalar(0));
    if (needs_grad)
        t.set_backprop(y, [x, y](Tape<Scalar>& tt) {
            tt.grad(x) += (tt.val(x) > Scalar(0)).select(tt.grad(y), ArrayX<Scalar>::Zero(tt.grad(y).size()));
        });
    return y;
}

template <typename Scalar>
Var tanh_op(Tape<Scalar>& t, Var x) {
    const Shape s = t.shape(x);
    const bool needs_grad = t.requires_grad(x);
    Var y = t.alloc(s, needs_grad);
    t.val(y) = t.val(x).tanh();
    if (needs_grad)
        t.set_backprop(y, [x, y](Tape<Scalar>& tt) {
            tt.grad(x) += tt.grad(y) * (Scalar(1) - tt.val(y).square());
        });
    return y;
}

template <typename Scalar>
Var upsample_nearest2x(Tape<Scalar>& t, Var x) {
    const Shape xs = t.shape(x);
    const Shape ys{xs.n, xs.c, xs.h * 2, xs.w * 2};
    const bool needs_grad = t.requires_grad(x);
    Var y = t.alloc(ys, needs_grad);
    {
        const ArrayX<Scalar>& xv = t.val(x);
        ArrayX<Scalar>& yv = t.val(y);
        for (int n = 0; n < xs.n; ++n)
            for (int c = 0; c < xs.c; ++c) {
                const Scalar* src = xv.data() + (static_cast<size_t>(n) * xs.c + c) * xs.h * xs.w;
                Scalar* dst = yv.data() + (static_cast<size_t>(n) * xs.c + c) * ys.h * ys.w;
                for (int iy = 0; iy < xs.h; ++iy)
                    for (int ix = 0; ix < xs.w; ++ix) {
                        const Scalar v = src[iy * xs.w + ix];
                        Scalar* cell = dst + (2 * iy) * ys.w + 2 * ix;
                        cell[0] = v;
                        cell[1] = v;
                        cell[ys.w] = v;
                        cell[ys.w + 1] = v;
                    }
            }
    }
    if (needs_grad)
        t.set_backprop(y, [x, y, xs, ys](Tape<Scalar>& tt) {
            const ArrayX<Scalar>& dyv = tt.grad(y);
            ArrayX<Scalar>& dxv = tt.grad(x);
            for (int n = 0; n < xs.n; ++n)
                for (int c = 0; c < xs.c; ++c) {
                    const Scalar* src = dyv.data() + (static_cast<size_t>(n) * xs.c + c) * ys.h * ys.w;
                    Scalar* dst = dxv.data() + (static_cast<size_t>(n) * xs.c + c) * xs.h * xs.w;
                    for (int iy = 0; iy < xs.h; ++iy)
                        for (int ix = 0; ix < xs.w; ++ix) {
                            const Scalar* cell = src + (2 * iy) * ys.w + 2 * ix;
                            dst[iy * xs.w + ix] += cell[0] + cell[1] + cell[ys.w] + cell[ys.w + 1];
                        }
                }
        });
    return y;
}

template <typename Scalar>
Var concat_channels(Tape<Scalar>& t, Var a, Var b) {
    const Shape as = t.shape(a);
    const Shape bs = t.shape(b);
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw Error("autodiff", "concat extent mismatch " + as.str() + " vs " + bs.str());
    const Shape ys{as.n, as.c + bs.c, as.h, as.w};
    const bool needs_grad = t.requires_grad(a) || t.requires_grad(b);
    Var y = t.alloc(ys, needs_grad);
    {
        const ArrayX<Scalar>& av = t.val(a);
        const ArrayX<Scalar>& bv = t.val(b);
        ArrayX<Scalar>& yv = t.val(y);
        for (int n = 0; n < as.n; ++n) {
            yv.segment(n * ys.per_sample(), as.per_sample()) = av.segment(n * as.per_sample(), as.per_sample());
            yv.segment(n * ys.per_sample() + as.per_sample(), bs.per_sample()) =
                bv.segment(n * bs.per_sample(), bs.per_sample());
        }
    }
    if (needs_grad)
        t.set_backprop(y, [a, b, y, as, bs, ys](Tape<Scalar>& tt) {
            const ArrayX<Scalar>& dyv = tt.grad(y);
            for (int n = 0; n < as.n; ++n) {
                if (tt.requires_grad(a))
                    tt.grad(a).segment(n * as.per_sample(), as.per_sample()) +=
                        dyv.segment(n * ys.per_sample(), as.per_sample());
                if (tt.requires_grad(b))
                    tt.grad(b).segment(n * bs.per_sample(), bs.per_sample()) +=
                        dyv.segment(n * ys.per_sample() + as.per_sample(), bs.per_sample());
            }
        });
    return y;
}

// Value copy with the graph edge cut.
template <typename Scalar>
Var detach(Tape<Scalar>& t, Var x) {
    return t.constant(t.shape(x), t.val(x));
}

template <typename Scalar>
Var sub(Tape<Scalar>& t, Var a, Var b) {
    const Shape s = t.shape(a);
    if (!(s == t.shape(b)))
        throw Error("autodiff", "sub shape mismatch " + s.str() + " vs " + t.shape(b).str());
    const bool needs_grad = t.requires_grad(a) || t.requires_grad(b);
    Var y = t.alloc(s, needs_grad);
    t.val(y) = t.val(a) - t.val(b);
    if (needs_grad)
        t.set_backprop(y, [a, b, y](Tape<Scalar>& tt) {
            if (tt.requires_grad(a)) tt.grad(a) += tt.grad(y);
            if (tt.requires_grad(b)) tt.grad(b) -= tt.grad(y);
        });
    return y;
}

// ---------------------------------------------------------------------------
// reductions (scalar outputs)
// ---------------------------------------------------------------------------

inline const Shape kScalarShape{1, 1, 1, 1};

// mean((x - target)^2) over every element
template <typename Scalar>
Var mean_squared_to(Tape<Scalar>& t, Var x, Scalar target) {
    const Shape s = t.shape(x);
    if (s.count() == 0) throw Error("losses", "empty score batch");
    const bool needs_grad = t.requires_grad(x);
    Var y = t.alloc(kScalarShape, needs_grad);
    t.val(y)[0] = (t.val(x) - target).square().mean();
    if (needs_grad)
        t.set_backprop(y, [x, y, target](Tape<Scalar>& tt) {
            const Scalar g = tt.grad(y)[0];
            const Scalar scale = Scalar(2) / Scalar(tt.val(x).size());
            tt.grad(x) += (g * scale) * (tt.val(x) - target);
        });
    return y;
}

// mean(|x|); the subgradient at exactly zero is taken as zero.
template <typename Scalar>
Var mean_abs(Tape<Scalar>& t, Var x) {
    const Shape s = t.shape(x);
    if (s.count() == 0) throw Error("losses", "empty tensor");
    const bool needs_grad = t.requires_grad(x);
    Var y = t.alloc(kScalarShape, needs_grad);
    t.val(y)[0] = t.val(x).abs().mean();
    if (needs_grad)
        t.set_backprop(y, [x, y](Tape<Scalar>& tt) {
            const Scalar g = tt.grad(y)[0] / Scalar(tt.val(x).size());
            tt.grad(x) += g * tt.val(x).sign();
        });
    return y;
}

// sum_i coeff_i * scalar_i
template <typename Scalar>
Var add_weighted(Tape<Scalar>& t, const std::vector<Var>& terms, const std::vector<Scalar>& coeffs) {
    if (terms.empty() || terms.size() != coeffs.size())
        throw Error("autodiff", "add_weighted needs matching non-empty term/coefficient lists");
    bool needs_grad = false;
    Scalar total = 0;
    for (size_t i = 0; i < terms.size(); ++i) {
        if (t.shape(terms[i]).count() != 1) throw Error("autodiff", "add_weighted expects scalar terms");
        total += coeffs[i] * t.val(terms[i])[0];
        needs_grad = needs_grad || t.requires_grad(terms[i]);
    }
    Var y = t.alloc(kScalarShape, needs_grad);
    t.val(y)[0] = total;
    if (needs_grad) {
        std::vector<Var> terms_c = terms;
        std::vector<Scalar> coeffs_c = coeffs;
        t.set_backprop(y, [terms_c, coeffs_c, y](Tape<Scalar>& tt) {
            const Scalar g = tt.grad(y)[0];
            for (size_t i = 0; i < terms_c.size(); ++i)
                if (tt.requires_grad(terms_c[i])) tt.grad(terms_c[i])[0] += g * coeffs_c[i];
        });
    }
    return y;
}

} // namespace msgdd

#endif
