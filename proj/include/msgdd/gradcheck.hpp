#ifndef MSGDD_GRADCHECK_HPP
#define MSGDD_GRADCHECK_HPP

#include "msgdd/trainer.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace msgdd {

// Per-block gradient L2 norms for one backward pass of the generator
// objective. Blocks follow the parameter naming (enc1.., dec1.., enc_tap1..,
// dec_tap1.., tap_bottleneck, head).
struct GradProbeReport {
    std::vector<std::pair<std::string, double>> blocks; // ordered by first appearance
    double objective = 0;

    double norm(const std::string& block) const {
        for (const auto& [name, value] : blocks)
            if (name == block) return value;
        throw Error("evaluation", "no gradient entry for block '" + block + "'");
    }
};

struct ProbeOptions {
    bool include_l1 = true;
    bool ablate_taps = false; // zero the discriminator side inputs
    double lambda_l1 = 100.0;
};

inline std::string block_of(const std::string& param_name) {
    const size_t dot = param_name.find('.');
    return dot == std::string::npos ? param_name : param_name.substr(0, dot);
}

// One backward pass of the generator objective; no parameters are updated and
// batch-norm running statistics stay frozen.
template <typename Scalar>
GradProbeReport grad_probe(ModelSet<Scalar>& models, const std::vector<PairedSample<Scalar>>& batch,
                           const ProbeOptions& opt) {
    if (batch.empty()) throw Error("evaluation", "grad probe needs a non-empty batch");
    const int L = models.cfg.model.scales;
    std::vector<Image<Scalar>> inputs, targets;
    std::vector<std::vector<Image<Scalar>>> gtds_levels(L);
    for (const auto& s : batch) {
        inputs.push_back(s.input);
        targets.push_back(s.target);
        ScalePyramid<Scalar> pyr = build_pyramid(s.target, L);
        for (int l = 0; l < L; ++l) gtds_levels[l].push_back(pyr.levels[l]);
    }

    Tape<Scalar> t;
    auto bound = models.gen.bind(t, /*trainable=*/true);
    Var input = batch_constant(t, inputs);
    auto fwd = models.gen.forward(t, bound, input);
    NormMode mode;
    mode.update_running = false;
    GenObjectiveVars obj = generator_objective(t, models, fwd, input, targets, gtds_levels, mode,
                                               opt.lambda_l1, opt.include_l1, opt.ablate_taps);
    t.backward(obj.total);

    auto refs = detail::trainable_refs<Scalar>(models.gen);
    GradProbeReport report;
    report.objective = t.val(obj.total)[0];
    std::string current;
    double acc = 0;
    auto flush = [&]() {
        if (!current.empty()) report.blocks.push_back({current, std::sqrt(acc)});
    };
    for (size_t i = 0; i < refs.size(); ++i) {
        const std::string blk = block_of(refs[i].name);
        if (blk != current) {
            flush();
            current = blk;
            acc = 0;
        }
        acc += static_cast<double>(t.grad(bound.leaves[i]).template cast<double>().square().sum());
    }
    flush();
    return report;
}

// ---------------------------------------------------------------------------
// finite differences
// ---------------------------------------------------------------------------

struct FiniteDiffResult {
    double max_rel_err_gen = 0;
    double max_rel_err_dis = 0;
    int params_checked = 0;
};

namespace detail {

// Random batch for gradient verification: noise inputs, random binary masks.
// Generic point in input space, away from the |x| kink and ReLU corners.
template <typename Scalar>
std::vector<PairedSample<Scalar>> random_probe_batch(int n, int resolution, int in_c, int out_c,
                                                     SeededRng& rng) {
    std::vector<PairedSample<Scalar>> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].id = "probe_" + std::to_string(i);
        out[i].input = Image<Scalar>(resolution, resolution, in_c);
        out[i].target = Image<Scalar>(resolution, resolution, out_c);
        for (Eigen::Index k = 0; k < out[i].input.values.size(); ++k)
            out[i].input.values[k] = static_cast<Scalar>(std::clamp(0.5 * rng.normal(), -1.0, 1.0));
        for (Eigen::Index k = 0; k < out[i].target.values.size(); ++k)
            out[i].target.values[k] = rng.uniform() < 0.5 ? Scalar(-1) : Scalar(1);
    }
    return out;
}

} // namespace detail

// Central finite differences vs analytic gradients on a micro configuration.
// Checks n_params randomly sampled parameters of the generator objective and
// of the combined discriminator objective; returns the max relative errors
// with denominator max(|analytic|, 1e-8). Double precision throughout. The
// mean-|x| subgradient at exactly zero is taken as zero, and the random batch
// keeps the losses away from that point.
inline FiniteDiffResult finite_diff_check(const RunConfig& micro_config, int n_params, double step,
                                          std::uint64_t sample_seed = 2024) {
    using S = double;
    const RunConfig cfg = require_valid(micro_config);
    ModelSet<S> models(cfg);
    models.init_params();

    SeededRng rng(derive_seed(sample_seed, 0x46444946ULL)); // "FDIF"
    auto batch = detail::random_probe_batch<S>(2, cfg.image_size, cfg.model.input_channels,
                                               cfg.model.output_channels, rng);
    const int L = cfg.model.scales;
    std::vector<Image<S>> inputs, targets;
    std::vector<std::vector<Image<S>>> ids_levels(L), gtds_levels(L);
    for (const auto& s : batch) {
        inputs.push_back(s.input);
        targets.push_back(s.target);
        ScalePyramid<S> ip = build_pyramid(s.input, L);
        ScalePyramid<S> gp = build_pyramid(s.target, L);
        for (int l = 0; l < L; ++l) {
            ids_levels[l].push_back(project_channels(ip.levels[l], cfg.model.output_channels));
            gtds_levels[l].push_back(gp.levels[l]);
        }
    }
    NormMode frozen;
    frozen.update_running = false;

    // ---- generator objective -------------------------------------------
    auto gen_forward = [&](bool with_grad) {
        auto t = std::make_unique<Tape<S>>();
        auto bound = models.gen.bind(*t, with_grad);
        Var input = batch_constant(*t, inputs);
        auto fwd = models.gen.forward(*t, bound, input);
        GenObjectiveVars obj =
            generator_objective(*t, models, fwd, input, targets, gtds_levels, frozen, cfg.lambda_l1);
        return std::tuple(std::move(t), bound, obj);
    };

    FiniteDiffResult result;
    {
        auto [t, bound, obj] = gen_forward(true);
        t->backward(obj.total);
        auto refs = detail::trainable_refs<S>(models.gen);
        std::vector<ArrayX<S>> grads;
        for (size_t i = 0; i < refs.size(); ++i) grads.push_back(t->grad(bound.leaves[i]));
        t.reset();

        Eigen::Index total = 0;
        for (auto& r : refs) total += r.data->size();
        for (int k = 0; k < n_params; ++k) {
            Eigen::Index pick = static_cast<Eigen::Index>(rng.uniform_int(total));
            size_t ref_idx = 0;
            while (pick >= refs[ref_idx].data->size()) {
                pick -= refs[ref_idx].data->size();
                ++ref_idx;
            }
            S& slot = (*refs[ref_idx].data)[pick];
            const S saved = slot;
            slot = saved + step;
            auto [tp, bp, op] = gen_forward(false);
            const double up = tp->val(op.total)[0];
            slot = saved - step;
            auto [tm, bm, om] = gen_forward(false);
            const double down = tm->val(om.total)[0];
            slot = saved;
            const double numeric = (up - down) / (2 * step);
            const double analytic = grads[ref_idx][pick];
            const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-8);
            result.max_rel_err_gen = std::max(result.max_rel_err_gen, rel);
        }
    }

    // ---- discriminator objective ----------------------------------------
    // Taps come from one fixed generator forward; only Dis parameters move.
    std::vector<Image<S>> eo_values, do_values, output_values;
    {
        Tape<S> t;
        auto bound = models.gen.bind(t, false);
        auto fwd = models.gen.forward(t, bound, batch_constant(t, inputs));
        for (int n = 0; n < static_cast<int>(batch.size()); ++n)
            output_values.push_back(unpack_sample(t, fwd.output, n));
        for (int l = 0; l < L; ++l)
            for (int n = 0; n < static_cast<int>(batch.size()); ++n) {
                eo_values.push_back(unpack_sample(t, fwd.enc_taps[l], n));
                do_values.push_back(unpack_sample(t, fwd.dec_taps[l], n));
            }
    }
    auto level_slice = [&](const std::vector<Image<S>>& flat, int level) {
        std::vector<Image<S>> out;
        for (size_t n = 0; n < batch.size(); ++n) out.push_back(flat[level * batch.size() + n]);
        return out;
    };

    auto dis_forward = [&](bool with_grad) {
        auto t = std::make_unique<Tape<S>>();
        std::vector<Var> leaves;
        Var loss_e{}, loss_d{};
        if (models.use_dis_e) {
            auto be = models.dis_e.bind(*t, with_grad);
            leaves.insert(leaves.end(), be.leaves.begin(), be.leaves.end());
            std::vector<Var> real_sides, fake_sides;
            for (int l = 0; l < L; ++l) real_sides.push_back(batch_constant(*t, ids_levels[l]));
            for (int l = 0; l < L; ++l) fake_sides.push_back(batch_constant(*t, level_slice(eo_values, l)));
            Var real = models.dis_e.score(*t, be, real_sides, frozen);
            Var fake = models.dis_e.score(*t, be, fake_sides, frozen);
            loss_e = lsgan_disc_loss(*t, real, fake);
        }
        if (models.use_dis_d) {
            auto bd = models.dis_d.bind(*t, with_grad);
            leaves.insert(leaves.end(), bd.leaves.begin(), bd.leaves.end());
            std::vector<Var> real_sides, fake_sides;
            for (int l = 0; l < L; ++l) real_sides.push_back(batch_constant(*t, gtds_levels[l]));
            for (int l = 0; l < L; ++l) fake_sides.push_back(batch_constant(*t, level_slice(do_values, l)));
            Var real = models.dis_d.score(*t, bd, batch_constant(*t, targets), real_sides, frozen);
            Var fake = models.dis_d.score(*t, bd, batch_constant(*t, output_values), fake_sides, frozen);
            loss_d = lsgan_disc_loss(*t, real, fake);
        }
        if (!loss_e.valid() || !loss_d.valid())
            throw Error("evaluation", "finite_diff_check needs the msgdd variant");
        Var total = add_weighted(*t, {loss_e, loss_d}, {S(0.5), S(0.5)});
        return std::tuple(std::move(t), leaves, total);
    };

    {
        auto [t, leaves, total] = dis_forward(true);
        t->backward(total);
        auto refs_e = detail::trainable_refs<S>(models.dis_e);
        auto refs_d = detail::trainable_refs<S>(models.dis_d);
        std::vector<ParamRef<S>> refs = refs_e;
        refs.insert(refs.end(), refs_d.begin(), refs_d.end());
        std::vector<ArrayX<S>> grads;
        for (size_t i = 0; i < refs.size(); ++i) grads.push_back(t->grad(leaves[i]));
        t.reset();

        Eigen::Index total_params = 0;
        for (auto& r : refs) total_params += r.data->size();
        for (int k = 0; k < n_params; ++k) {
            Eigen::Index pick = static_cast<Eigen::Index>(rng.uniform_int(total_params));
            size_t ref_idx = 0;
            while (pick >= refs[ref_idx].data->size()) {
                pick -= refs[ref_idx].data->size();
                ++ref_idx;
            }
            S& slot = (*refs[ref_idx].data)[pick];
            const S saved = slot;
            slot = saved + step;
            auto [tp, lp, op] = dis_forward(false);
            const double up = tp->val(op)[0];
            slot = saved - step;
            auto [tm, lm, om] = dis_forward(false);
            const double down = tm->val(om)[0];
            slot = saved;
            const double numeric = (up - down) / (2 * step);
            const double analytic = grads[ref_idx][pick];
            const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-8);
            result.max_rel_err_dis = std::max(result.max_rel_err_dis, rel);
        }
    }
    result.params_checked = 2 * n_params;
    return result;
}

} // namespace msgdd

#endif
