#ifndef MSGDD_LOSSES_HPP
#define MSGDD_LOSSES_HPP

#include "msgdd/batch.hpp"
#include "msgdd/ops.hpp"

#include <vector>

namespace msgdd {

// All scalar loss terms of one optimization step.
struct LossBundle {
    double l_dis_e = 0;
    double l_dis_d = 0;
    double l_dis = 0;
    double l_g_dis = 0;
    double l_g_l1 = 0;
    double l_g_total = 0;
};

// Least-squares discriminator loss: 1/2 mean((real-1)^2) + 1/2 mean(fake^2),
// means over batch and map positions.
template <typename Scalar>
Var lsgan_disc_loss(Tape<Scalar>& t, Var real_scores, Var fake_scores) {
    Var real_term = mean_squared_to(t, real_scores, Scalar(1));
    Var fake_term = mean_squared_to(t, fake_scores, Scalar(0));
    return add_weighted(t, {real_term, fake_term}, {Scalar(0.5), Scalar(0.5)});
}

// Generator adversarial loss: 1/2 [mean((De(fake)-1)^2) + mean((Dd(fake)-1)^2)].
template <typename Scalar>
Var lsgan_gen_loss(Tape<Scalar>& t, Var fake_scores_e, Var fake_scores_d) {
    Var e_term = mean_squared_to(t, fake_scores_e, Scalar(1));
    Var d_term = mean_squared_to(t, fake_scores_d, Scalar(1));
    return add_weighted(t, {e_term, d_term}, {Scalar(0.5), Scalar(0.5)});
}

// Scale set for the k-L1 ablation: the full-resolution pair is always present;
// k = 2 adds the finest decoder tap, k = 4 adds every decoder tap.
inline std::vector<int> l1_tap_levels(int k_l1, int scales) {
    switch (k_l1) {
    case 1:
        return {};
    case 2:
        return {1};
    case 4: {
        std::vector<int> all;
        for (int s = 1; s <= scales; ++s) all.push_back(s);
        return all;
    }
    default:
        throw Error("losses", "k_l1 must be one of 1, 2, 4 (got " + std::to_string(k_l1) + ")");
    }
}

// Sum over selected scales of mean |target_s - candidate_s|; per-scale means,
// so every scale weighs equally.
template <typename Scalar>
Var multiscale_l1_loss(Tape<Scalar>& t, Var output, const std::vector<Var>& dec_taps, Var gt,
                       const std::vector<Var>& gt_pyramid, int k_l1) {
    if (!(t.shape(output) == t.shape(gt)))
        throw Error("losses", "output/ground-truth resolution mismatch: " + t.shape(output).str() +
                                  " vs " + t.shape(gt).str());
    std::vector<Var> terms{mean_abs(t, sub(t, output, gt))};
    for (int level : l1_tap_levels(k_l1, static_cast<int>(dec_taps.size()))) {
        Var tap = dec_taps.at(level - 1);
        Var target = gt_pyramid.at(level - 1);
        if (!(t.shape(tap) == t.shape(target)))
            throw Error("losses", "L1 level " + std::to_string(level) + " resolution mismatch: " +
                                      t.shape(tap).str() + " vs " + t.shape(target).str());
        terms.push_back(mean_abs(t, sub(t, tap, target)));
    }
    return add_weighted(t, terms, std::vector<Scalar>(terms.size(), Scalar(1)));
}

// Overall generator objective: lambda * L1 + adversarial.
template <typename Scalar>
Var gen_total_loss(Tape<Scalar>& t, Var adv, Var l1, Scalar lambda_l1) {
    return add_weighted(t, {l1, adv}, {lambda_l1, Scalar(1)});
}

// --------------------------------------------------------------------------
// value-level wrappers (same tape ops run on constants)
// --------------------------------------------------------------------------

template <typename Scalar>
double loss_dis_e(const std::vector<Image<Scalar>>& real_scores,
                  const std::vector<Image<Scalar>>& fake_scores) {
    Tape<Scalar> t;
    return t.val(lsgan_disc_loss(t, batch_constant(t, real_scores), batch_constant(t, fake_scores)))[0];
}

template <typename Scalar>
double loss_dis_d(const std::vector<Image<Scalar>>& real_scores,
                  const std::vector<Image<Scalar>>& fake_scores) {
    return loss_dis_e(real_scores, fake_scores); // identical form on Dis-D maps
}

inline double loss_dis_total(double l_dis_e, double l_dis_d) { return 0.5 * (l_dis_e + l_dis_d); }

template <typename Scalar>
double loss_gen_adv(const std::vector<Image<Scalar>>& fake_scores_e,
                    const std::vector<Image<Scalar>>& fake_scores_d) {
    Tape<Scalar> t;
    return t.val(lsgan_gen_loss(t, batch_constant(t, fake_scores_e), batch_constant(t, fake_scores_d)))[0];
}

template <typename Scalar>
double loss_gen_l1(const Image<Scalar>& output, const ScalePyramid<Scalar>& decoder_taps,
                   const Image<Scalar>& gt, const ScalePyramid<Scalar>& gt_pyramid, int k_l1) {
    Tape<Scalar> t;
    std::vector<Var> taps, targets;
    for (const auto& level : decoder_taps.levels) taps.push_back(batch_constant(t, {level}));
    for (const auto& level : gt_pyramid.levels) targets.push_back(batch_constant(t, {level}));
    Var loss = multiscale_l1_loss(t, batch_constant(t, {output}), taps, batch_constant(t, {gt}),
                                  targets, k_l1);
    return t.val(loss)[0];
}

inline double loss_gen_total(double l_g_dis, double l_g_l1, double lambda_l1) {
    return lambda_l1 * l_g_l1 + l_g_dis;
}

} // namespace msgdd

#endif
