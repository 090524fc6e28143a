#ifndef MSGDD_ADAM_HPP
#define MSGDD_ADAM_HPP

#include "msgdd/params.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace msgdd {

// Adam over one network. Slots map 1:1 (by order) onto the network's
// trainable ParamRef list, so begin_step/update must walk that list in its
// collect() order. Moments persist across steps and into checkpoints.
template <typename Scalar>
class Adam {
public:
    Adam() = default;
    Adam(double learning_rate, double beta1, double beta2, double eps = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void begin_step() {
        ++step_count_;
        cursor_ = 0;
    }

    void update(ArrayX<Scalar>& param, const ArrayX<Scalar>& grad, double grad_scale = 1.0) {
        if (cursor_ == slots_m_.size()) {
            slots_m_.push_back(ArrayX<Scalar>::Zero(param.size()));
            slots_v_.push_back(ArrayX<Scalar>::Zero(param.size()));
        }
        ArrayX<Scalar>& m = slots_m_[cursor_];
        ArrayX<Scalar>& v = slots_v_[cursor_];
        ++cursor_;
        if (m.size() != param.size())
            throw Error("trainer", "optimizer slot size mismatch (parameter order changed)");

        const Scalar b1 = Scalar(beta1_), b2 = Scalar(beta2_);
        if (grad_scale == 1.0) {
            m = b1 * m + (Scalar(1) - b1) * grad;
            v = b2 * v + (Scalar(1) - b2) * grad.square();
        } else {
            const ArrayX<Scalar> g = grad * Scalar(grad_scale);
            m = b1 * m + (Scalar(1) - b1) * g;
            v = b2 * v + (Scalar(1) - b2) * g.square();
        }
        const double corr1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
        const double corr2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
        const Scalar step = Scalar(lr_ / corr1);
        const Scalar inv_corr2 = Scalar(1.0 / corr2);
        param -= step * m / ((v * inv_corr2).sqrt() + Scalar(eps_));
    }

    long long step_count() const { return step_count_; }
    size_t slot_count() const { return slots_m_.size(); }
    ArrayX<Scalar>& moment1(size_t slot) { return slots_m_[slot]; }
    ArrayX<Scalar>& moment2(size_t slot) { return slots_v_[slot]; }
    void set_step_count(long long n) { step_count_ = n; }

    // Ensures slots exist for checkpoint loading before any step ran.
    void shape_slots(const std::vector<Eigen::Index>& sizes) {
        if (!slots_m_.empty()) return;
        for (Eigen::Index s : sizes) {
            slots_m_.push_back(ArrayX<Scalar>::Zero(s));
            slots_v_.push_back(ArrayX<Scalar>::Zero(s));
        }
    }

private:
    double lr_ = 0.0002, beta1_ = 0.5, beta2_ = 0.999, eps_ = 1e-8;
    long long step_count_ = 0;
    size_t cursor_ = 0;
    std::vector<ArrayX<Scalar>> slots_m_, slots_v_;
};

} // namespace msgdd

#endif
