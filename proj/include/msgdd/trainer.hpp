#ifndef MSGDD_TRAINER_HPP
#define MSGDD_TRAINER_HPP

#include "msgdd/adam.hpp"
#include "msgdd/checkpoint.hpp"
#include "msgdd/dataset.hpp"
#include "msgdd/discriminator.hpp"
#include "msgdd/generator.hpp"
#include "msgdd/losses.hpp"
#include "msgdd/metrics.hpp"
#include "msgdd/plot.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace msgdd {

// Stream tags for the seed-derived generators, one purpose each. Training
// randomness is a pure function of (seed, epoch, purpose), which makes resume
// from an epoch boundary exact without serializing engine state.
inline constexpr std::uint64_t kTagInitGen = 0x47454e49ULL;
inline constexpr std::uint64_t kTagInitDisE = 0x44495345ULL;
inline constexpr std::uint64_t kTagInitDisD = 0x44495344ULL;
inline constexpr std::uint64_t kTagShuffle = 0x53485546ULL;
inline constexpr std::uint64_t kTagAugment = 0x41554758ULL;

// Raised when a loss turns non-finite; carries enough context for the CLI
// run summary.
class TrainAbort : public Error {
public:
    int epoch;
    int step;
    std::string term;
    TrainAbort(int epoch_, int step_, std::string term_)
        : Error("trainer", "non-finite " + term_ + " at epoch " + std::to_string(epoch_) + " step " +
                               std::to_string(step_)),
          epoch(epoch_), step(step_), term(std::move(term_)) {}
};

namespace detail {

struct NonFiniteLoss {
    std::string term;
};

inline void check_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NonFiniteLoss{term};
}

} // namespace detail

// The three networks of one experiment. Which discriminators exist follows
// the variant: msgdd uses both, pix2pix_like keeps a single conditional
// patch discriminator, unet_only trains with the L1 term alone.
template <typename Scalar>
struct ModelSet {
    RunConfig cfg; // validated + normalized
    GeneratorNet<Scalar> gen;
    EncoderScoreNet<Scalar> dis_e;
    DecoderScoreNet<Scalar> dis_d;
    bool use_dis_e = false;
    bool use_dis_d = false;

    explicit ModelSet(const RunConfig& config) : cfg(config), gen(config.model) {
        const ModelConfig& m = cfg.model;
        if (cfg.variant == "msgdd") {
            use_dis_e = use_dis_d = true;
            dis_e = EncoderScoreNet<Scalar>(m.scales, m.base_channels, m.output_channels);
            dis_d = DecoderScoreNet<Scalar>(m.scales, m.base_channels, m.output_channels,
                                            m.output_channels, /*with_sides=*/true);
        } else if (cfg.variant == "pix2pix_like") {
            use_dis_d = true;
            dis_d = DecoderScoreNet<Scalar>(m.scales, m.base_channels,
                                            m.input_channels + m.output_channels, 0,
                                            /*with_sides=*/false);
        } else if (cfg.variant != "unet_only") {
            throw Error("trainer", "unknown variant '" + cfg.variant + "'");
        }
    }

    void init_params() {
        const double stddev = cfg.model.init == "paper-literal" ? 1.0 : cfg.model.init_std;
        SeededRng g_rng(derive_seed(cfg.seed, kTagInitGen));
        gen.init_params(g_rng);
        if (use_dis_e) {
            SeededRng e_rng(derive_seed(cfg.seed, kTagInitDisE));
            dis_e.init_params(e_rng, stddev);
        }
        if (use_dis_d) {
            SeededRng d_rng(derive_seed(cfg.seed, kTagInitDisD));
            dis_d.init_params(d_rng, stddev);
        }
    }

    // All tensors, names prefixed by network.
    std::vector<ParamRef<Scalar>> collect_all() {
        std::vector<ParamRef<Scalar>> out;
        auto add = [&out](auto& net, const std::string& prefix) {
            std::vector<ParamRef<Scalar>> tmp;
            net.collect(tmp);
            for (auto& r : tmp) out.push_back({prefix + r.name, r.data, r.trainable});
        };
        add(gen, "gen.");
        if (use_dis_e) add(dis_e, "dis_e.");
        if (use_dis_d) add(dis_d, "dis_d.");
        return out;
    }
};

template <typename Scalar>
struct TrainSession {
    ModelSet<Scalar> models;
    Adam<Scalar> opt_g, opt_e, opt_d;
    int epochs_done = 0;

    explicit TrainSession(const RunConfig& cfg)
        : models(cfg),
          opt_g(cfg.optimizer.learning_rate, cfg.optimizer.beta1, cfg.optimizer.beta2),
          opt_e(cfg.optimizer.learning_rate, cfg.optimizer.beta1, cfg.optimizer.beta2),
          opt_d(cfg.optimizer.learning_rate, cfg.optimizer.beta1, cfg.optimizer.beta2) {}
};

namespace detail {

template <typename Scalar, typename Net>
std::vector<ParamRef<Scalar>> trainable_refs(Net& net) {
    std::vector<ParamRef<Scalar>> refs, out;
    net.collect(refs);
    for (auto& r : refs)
        if (r.trainable) out.push_back(r);
    return out;
}

// One optimizer sweep over a network whose leaves were bound in collect()
// order. Gradient clipping (when enabled) rescales by the global norm.
template <typename Scalar, typename Net>
void apply_updates(Adam<Scalar>& opt, Tape<Scalar>& t, const std::vector<Var>& leaves, Net& net,
                   double clip_norm) {
    auto refs = trainable_refs<Scalar>(net);
    if (refs.size() != leaves.size())
        throw Error("trainer", "parameter binding misalignment (" + std::to_string(refs.size()) +
                                   " refs vs " + std::to_string(leaves.size()) + " leaves)");
    double scale = 1.0;
    if (clip_norm > 0) {
        double sq = 0;
        for (Var v : leaves) sq += static_cast<double>(t.grad(v).template cast<double>().square().sum());
        const double norm = std::sqrt(sq);
        if (norm > clip_norm) scale = clip_norm / norm;
    }
    opt.begin_step();
    for (size_t i = 0; i < leaves.size(); ++i) opt.update(*refs[i].data, t.grad(leaves[i]), scale);
}

template <typename Scalar>
Var copy_constant(Tape<Scalar>& dst, const Tape<Scalar>& src, Var v) {
    return dst.constant(src.shape(v), src.val(v));
}

} // namespace detail

struct GenObjectiveVars {
    Var total, adv, l1; // adv/l1 stay invalid when the variant drops the term
};

// Builds the generator objective on an existing tape holding a live forward
// pass. ablate_taps replaces the discriminator side inputs with zeros (the
// gradient-flow comparison probe); include_l1=false gives the adversarial-only
// objective. Discriminator parameters enter as constants: their gradients are
// not needed for a generator update.
template <typename Scalar>
GenObjectiveVars generator_objective(Tape<Scalar>& t, ModelSet<Scalar>& models,
                                     const typename GeneratorNet<Scalar>::ForwardResult& fwd,
                                     Var input, const std::vector<Image<Scalar>>& targets,
                                     const std::vector<std::vector<Image<Scalar>>>& gtds_levels,
                                     const NormMode& mode, double lambda_l1, bool include_l1 = true,
                                     bool ablate_taps = false) {
    const RunConfig& cfg = models.cfg;
    GenObjectiveVars out;
    auto zeros_like = [&t](Var v) {
        return t.constant(t.shape(v), ArrayX<Scalar>::Zero(t.shape(v).count()));
    };
    if (cfg.variant == "msgdd") {
        auto be = models.dis_e.bind(t, /*trainable=*/false);
        auto bd = models.dis_d.bind(t, /*trainable=*/false);
        std::vector<Var> e_sides, d_sides;
        for (Var v : fwd.enc_taps) e_sides.push_back(ablate_taps ? zeros_like(v) : v);
        for (Var v : fwd.dec_taps) d_sides.push_back(ablate_taps ? zeros_like(v) : v);
        Var fake_e = models.dis_e.score(t, be, e_sides, mode);
        Var fake_d = models.dis_d.score(t, bd, fwd.output, d_sides, mode);
        out.adv = lsgan_gen_loss(t, fake_e, fake_d);
    } else if (cfg.variant == "pix2pix_like") {
        auto bd = models.dis_d.bind(t, false);
        Var fake_pair = concat_channels(t, input, fwd.output);
        Var fake_d = models.dis_d.score(t, bd, fake_pair, {}, mode);
        Var term = mean_squared_to(t, fake_d, Scalar(1));
        out.adv = add_weighted(t, {term}, {Scalar(0.5)});
    }
    if (include_l1) {
        Var gt_var = batch_constant(t, targets);
        std::vector<Var> gt_pyr;
        for (const auto& level : gtds_levels) gt_pyr.push_back(batch_constant(t, level));
        const int k_l1 = cfg.variant == "msgdd" ? cfg.k_l1 : 1;
        out.l1 = multiscale_l1_loss(t, fwd.output, fwd.dec_taps, gt_var, gt_pyr, k_l1);
    }
    if (out.adv.valid() && out.l1.valid())
        out.total = gen_total_loss(t, out.adv, out.l1, Scalar(lambda_l1));
    else if (out.l1.valid())
        out.total = add_weighted(t, {out.l1}, {Scalar(lambda_l1)});
    else if (out.adv.valid())
        out.total = out.adv;
    else
        throw Error("trainer", "generator objective has no terms");
    return out;
}

// One alternating optimization step over a batch:
//   1. generator forward;
//   2. Dis-E update on (input pyramid | detached encoder taps);
//   3. Dis-D update on (ground truth + its pyramid | detached output + taps);
//   4. generator update on lambda*L1 + adversarial, re-scoring the live taps
//      through both freshly updated discriminators.
template <typename Scalar>
LossBundle train_step(TrainSession<Scalar>& session, const std::vector<PairedSample<Scalar>>& batch) {
    const RunConfig& cfg = session.models.cfg;
    const int L = cfg.model.scales;
    if (batch.empty()) throw Error("trainer", "empty batch");

    std::vector<Image<Scalar>> inputs, targets;
    for (const auto& s : batch) {
        inputs.push_back(s.input);
        targets.push_back(s.target);
    }
    // Per-level stacks of the data pyramids, [level][sample].
    std::vector<std::vector<Image<Scalar>>> ids_levels(L), gtds_levels(L);
    for (const auto& s : batch) {
        if (session.models.use_dis_e) {
            ScalePyramid<Scalar> pyr = build_pyramid(s.input, L);
            for (int l = 0; l < L; ++l)
                ids_levels[l].push_back(project_channels(pyr.levels[l], cfg.model.output_channels));
        }
        ScalePyramid<Scalar> pyr = build_pyramid(s.target, L);
        for (int l = 0; l < L; ++l) gtds_levels[l].push_back(pyr.levels[l]);
    }

    LossBundle bundle;
    NormMode train_mode;

    // phase 1: generator forward (kept live for phase 4)
    Tape<Scalar> tg;
    auto bg = session.models.gen.bind(tg, /*trainable=*/true);
    Var input = batch_constant(tg, inputs);
    auto fwd = session.models.gen.forward(tg, bg, input);

    // phase 2: Dis-E on real input pyramid vs detached encoder taps
    if (session.models.use_dis_e) {
        Tape<Scalar> te;
        auto be = session.models.dis_e.bind(te, true);
        std::vector<Var> real_sides, fake_sides;
        for (int l = 0; l < L; ++l) real_sides.push_back(batch_constant(te, ids_levels[l]));
        for (int l = 0; l < L; ++l) fake_sides.push_back(detail::copy_constant(te, tg, fwd.enc_taps[l]));
        Var real_scores = session.models.dis_e.score(te, be, real_sides, train_mode);
        Var fake_scores = session.models.dis_e.score(te, be, fake_sides, train_mode);
        Var loss = lsgan_disc_loss(te, real_scores, fake_scores);
        bundle.l_dis_e = te.val(loss)[0];
        detail::check_finite(bundle.l_dis_e, "l_dis_e");
        te.backward(loss);
        detail::apply_updates(session.opt_e, te, be.leaves, session.models.dis_e,
                              cfg.optimizer.clip_norm);
    }

    // phase 3: Dis-D on (ground truth, Gtds) vs detached (output, DOs)
    if (session.models.use_dis_d) {
        Tape<Scalar> td;
        auto bd = session.models.dis_d.bind(td, true);
        Var real_scores, fake_scores;
        if (cfg.variant == "msgdd") {
            Var real_first = batch_constant(td, targets);
            Var fake_first = detail::copy_constant(td, tg, fwd.output);
            std::vector<Var> real_sides, fake_sides;
            for (int l = 0; l < L; ++l) real_sides.push_back(batch_constant(td, gtds_levels[l]));
            for (int l = 0; l < L; ++l)
                fake_sides.push_back(detail::copy_constant(td, tg, fwd.dec_taps[l]));
            real_scores = session.models.dis_d.score(td, bd, real_first, real_sides, train_mode);
            fake_scores = session.models.dis_d.score(td, bd, fake_first, fake_sides, train_mode);
        } else { // pix2pix_like judges (input, candidate) pairs
            Var in_const = batch_constant(td, inputs);
            Var real_pair = concat_channels(td, in_const, batch_constant(td, targets));
            Var fake_pair = concat_channels(td, in_const, detail::copy_constant(td, tg, fwd.output));
            real_scores = session.models.dis_d.score(td, bd, real_pair, {}, train_mode);
            fake_scores = session.models.dis_d.score(td, bd, fake_pair, {}, train_mode);
        }
        Var loss = lsgan_disc_loss(td, real_scores, fake_scores);
        bundle.l_dis_d = td.val(loss)[0];
        detail::check_finite(bundle.l_dis_d, "l_dis_d");
        td.backward(loss);
        detail::apply_updates(session.opt_d, td, bd.leaves, session.models.dis_d,
                              cfg.optimizer.clip_norm);
    }
    bundle.l_dis = (session.models.use_dis_e && session.models.use_dis_d)
                       ? loss_dis_total(bundle.l_dis_e, bundle.l_dis_d)
                       : bundle.l_dis_e + bundle.l_dis_d;

    // phase 4: generator update through the updated discriminators
    GenObjectiveVars obj = generator_objective(tg, session.models, fwd, input, targets, gtds_levels,
                                               train_mode, cfg.lambda_l1);
    bundle.l_g_dis = obj.adv.valid() ? static_cast<double>(tg.val(obj.adv)[0]) : 0.0;
    bundle.l_g_l1 = obj.l1.valid() ? static_cast<double>(tg.val(obj.l1)[0]) : 0.0;
    bundle.l_g_total = tg.val(obj.total)[0];
    detail::check_finite(bundle.l_g_dis, "l_g_dis");
    detail::check_finite(bundle.l_g_l1, "l_g_l1");
    detail::check_finite(bundle.l_g_total, "l_g_total");
    tg.backward(obj.total);
    detail::apply_updates(session.opt_g, tg, bg.leaves, session.models.gen, cfg.optimizer.clip_norm);
    return bundle;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

template <typename Scalar>
Checkpoint<Scalar> build_checkpoint(TrainSession<Scalar>& session) {
    Checkpoint<Scalar> c;
    c.config_text = serialize_config(session.models.cfg);
    c.epoch = session.epochs_done;
    c.rng_state = "seed=" + std::to_string(session.models.cfg.seed) +
                  ";next_epoch=" + std::to_string(session.epochs_done + 1);
    for (auto& r : session.models.collect_all())
        c.entries.push_back(
            {r.name, r.trainable ? EntryKind::Param : EntryKind::Buffer, *r.data});

    auto add_opt = [&c](Adam<Scalar>& opt, auto& net, const std::string& prefix) {
        auto refs = detail::trainable_refs<Scalar>(net);
        std::vector<Eigen::Index> sizes;
        for (auto& r : refs) sizes.push_back(r.data->size());
        opt.shape_slots(sizes);
        for (size_t i = 0; i < refs.size(); ++i) {
            c.entries.push_back({"adam." + prefix + refs[i].name + ".m", EntryKind::OptState,
                                 opt.moment1(i)});
            c.entries.push_back({"adam." + prefix + refs[i].name + ".v", EntryKind::OptState,
                                 opt.moment2(i)});
        }
        ArrayX<Scalar> steps(1);
        steps[0] = static_cast<Scalar>(opt.step_count());
        c.entries.push_back({"adam." + prefix + "step_count", EntryKind::Meta, steps});
    };
    add_opt(session.opt_g, session.models.gen, "gen.");
    if (session.models.use_dis_e) add_opt(session.opt_e, session.models.dis_e, "dis_e.");
    if (session.models.use_dis_d) add_opt(session.opt_d, session.models.dis_d, "dis_d.");
    return c;
}

// Loads tensors by name (first mismatch reported by tensor name), then cross-
// checks the architecture-critical config fields.
template <typename Scalar>
void restore_session(TrainSession<Scalar>& session, const Checkpoint<Scalar>& ckpt) {
    for (auto& r : session.models.collect_all()) {
        const CheckpointEntry<Scalar>* e = ckpt.find(r.name);
        if (!e) throw Error("trainer", "checkpoint missing tensor '" + r.name + "'");
        if (e->data.size() != r.data->size())
            throw Error("trainer", "checkpoint tensor '" + r.name + "' has " +
                                       std::to_string(e->data.size()) + " values, model expects " +
                                       std::to_string(r.data->size()));
        *r.data = e->data;
    }
    const RunConfig stored = parse_config(ckpt.config_text);
    const RunConfig& cur = session.models.cfg;
    if (!(stored.model == cur.model) || stored.image_size != cur.image_size ||
        stored.variant != cur.variant || stored.k_l1 != cur.k_l1)
        throw Error("trainer", "checkpoint config is incompatible with the requested run");

    auto load_opt = [&ckpt](Adam<Scalar>& opt, auto& net, const std::string& prefix) {
        auto refs = detail::trainable_refs<Scalar>(net);
        std::vector<Eigen::Index> sizes;
        for (auto& r : refs) sizes.push_back(r.data->size());
        opt.shape_slots(sizes);
        for (size_t i = 0; i < refs.size(); ++i) {
            if (const auto* m = ckpt.find("adam." + prefix + refs[i].name + ".m"))
                opt.moment1(i) = m->data;
            if (const auto* v = ckpt.find("adam." + prefix + refs[i].name + ".v"))
                opt.moment2(i) = v->data;
        }
        if (const auto* sc = ckpt.find("adam." + prefix + "step_count"))
            opt.set_step_count(static_cast<long long>(sc->data[0]));
    };
    load_opt(session.opt_g, session.models.gen, "gen.");
    if (session.models.use_dis_e) load_opt(session.opt_e, session.models.dis_e, "dis_e.");
    if (session.models.use_dis_d) load_opt(session.opt_d, session.models.dis_d, "dis_d.");
    session.epochs_done = ckpt.epoch;
}

// ---------------------------------------------------------------------------
// full training loop
// ---------------------------------------------------------------------------

struct EpochRow {
    int epoch = 0;
    LossBundle mean;
    double val_f1 = 0;
};

struct TrainResult {
    std::vector<EpochRow> rows;
    double best_val_f1 = -1;
    int best_epoch = 0;
    double final_val_f1 = 0;
    std::string best_checkpoint, last_checkpoint, metrics_csv;
};

inline std::string metrics_csv_header() {
    return "epoch,l_dis_e,l_dis_d,l_g_dis,l_g_l1,l_g_total,val_f1";
}

inline std::string metrics_csv_row(const EpochRow& r) {
    return std::to_string(r.epoch) + "," + format_double(r.mean.l_dis_e) + "," +
           format_double(r.mean.l_dis_d) + "," + format_double(r.mean.l_g_dis) + "," +
           format_double(r.mean.l_g_l1) + "," + format_double(r.mean.l_g_total) + "," +
           format_double(r.val_f1);
}

// Epoch loop over the shuffled train split. Per-epoch CSV rows hold the exact
// arithmetic means of the per-step losses; checkpoints are written after
// every epoch (last) and on every validation-F1 improvement (best).
template <typename Scalar>
TrainResult train(TrainSession<Scalar>& session, const DatasetSplits<Scalar>& data) {
    namespace fs = std::filesystem;
    const RunConfig& cfg = session.models.cfg;
    if (data.train.empty()) throw Error("trainer", "train split is empty");
    fs::create_directories(cfg.out_dir);

    TrainResult result;
    result.metrics_csv = (fs::path(cfg.out_dir) / "metrics.csv").string();
    result.best_checkpoint = (fs::path(cfg.out_dir) / "checkpoint_best.ckpt").string();
    result.last_checkpoint = (fs::path(cfg.out_dir) / "checkpoint_last.ckpt").string();

    const bool fresh = session.epochs_done == 0;
    std::ofstream csv(result.metrics_csv, fresh ? std::ios::trunc : std::ios::app);
    if (!csv) throw Error("trainer", "cannot write metrics CSV '" + result.metrics_csv + "'");
    if (fresh) csv << metrics_csv_header() << "\n";

    const int batch_size = cfg.optimizer.batch_size;
    for (int epoch = session.epochs_done + 1; epoch <= cfg.optimizer.epochs; ++epoch) {
        SeededRng shuffle_rng(derive_seed(cfg.seed, kTagShuffle, static_cast<std::uint64_t>(epoch)));
        SeededRng aug_rng(derive_seed(cfg.seed, kTagAugment, static_cast<std::uint64_t>(epoch)));
        std::vector<int> order(data.train.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        shuffle_rng.shuffle(order);

        LossBundle sums;
        int steps = 0;
        for (size_t begin = 0; begin < order.size(); begin += batch_size) {
            const size_t end = std::min(order.size(), begin + batch_size);
            std::vector<PairedSample<Scalar>> batch;
            for (size_t i = begin; i < end; ++i)
                batch.push_back(augment(data.train[order[i]], aug_rng, cfg.aug).sample);
            try {
                LossBundle b = train_step(session, batch);
                sums.l_dis_e += b.l_dis_e;
                sums.l_dis_d += b.l_dis_d;
                sums.l_dis += b.l_dis;
                sums.l_g_dis += b.l_g_dis;
                sums.l_g_l1 += b.l_g_l1;
                sums.l_g_total += b.l_g_total;
            } catch (const detail::NonFiniteLoss& nf) {
                throw TrainAbort(epoch, steps + 1, nf.term);
            }
            ++steps;
        }

        EpochRow row;
        row.epoch = epoch;
        row.mean.l_dis_e = sums.l_dis_e / steps;
        row.mean.l_dis_d = sums.l_dis_d / steps;
        row.mean.l_dis = sums.l_dis / steps;
        row.mean.l_g_dis = sums.l_g_dis / steps;
        row.mean.l_g_l1 = sums.l_g_l1 / steps;
        row.mean.l_g_total = sums.l_g_total / steps;
        row.val_f1 = data.val.empty() ? 0.0 : evaluate(session.models.gen, data.val, "val").mean_f1;
        result.rows.push_back(row);
        csv << metrics_csv_row(row) << "\n";
        csv.flush();

        session.epochs_done = epoch;
        save_checkpoint(result.last_checkpoint, build_checkpoint(session));
        if (row.val_f1 > result.best_val_f1) {
            result.best_val_f1 = row.val_f1;
            result.best_epoch = epoch;
            save_checkpoint(result.best_checkpoint, build_checkpoint(session));
        }

        if (cfg.tap_grid_every > 0 && epoch % cfg.tap_grid_every == 0) {
            const PairedSample<Scalar>& probe = data.val.empty() ? data.train.front() : data.val.front();
            GeneratorOutput<Scalar> out = generate(session.models.gen, probe.input);
            char name[48];
            std::snprintf(name, sizeof(name), "taps_epoch_%04d.png", epoch);
            std::vector<ImageF> enc_taps, dec_taps;
            for (auto& tp : out.encoder_taps.levels) enc_taps.push_back(image_cast<float>(tp));
            for (auto& tp : out.decoder_taps.levels) dec_taps.push_back(image_cast<float>(tp));
            write_tap_grid((fs::path(cfg.out_dir) / name).string(), image_cast<float>(probe.input),
                           enc_taps, dec_taps, image_cast<float>(out.output),
                           image_cast<float>(probe.target));
        }
    }
    result.final_val_f1 = result.rows.empty() ? 0.0 : result.rows.back().val_f1;
    if (result.best_epoch == 0 && !result.rows.empty()) {
        result.best_val_f1 = result.final_val_f1;
        result.best_epoch = result.rows.back().epoch;
    }
    return result;
}

template <typename Scalar>
struct RunOutput {
    TrainResult result;
    std::unique_ptr<TrainSession<Scalar>> session;
    DatasetSplits<Scalar> data;
};

inline RunConfig require_valid(const RunConfig& config) {
    ValidationResult vr = validate_config(config);
    if (!vr.ok()) {
        std::string joined;
        for (const auto& e : vr.errors) joined += (joined.empty() ? "" : "; ") + e;
        throw Error("core", "invalid config: " + joined);
    }
    return vr.config;
}

// Config-level entry: validates, loads the dataset, builds or resumes the
// session and runs the loop.
template <typename Scalar>
RunOutput<Scalar> train_run(const RunConfig& config, const std::string& resume_path = "") {
    const RunConfig cfg = require_valid(config);
    RunOutput<Scalar> out;
    DatasetManifest manifest{cfg.dataset_root, cfg.train_count, cfg.val_count, cfg.test_count,
                             cfg.image_size};
    out.data = load_dataset<Scalar>(manifest);
    out.session = std::make_unique<TrainSession<Scalar>>(cfg);
    if (!resume_path.empty())
        restore_session(*out.session, load_checkpoint<Scalar>(resume_path));
    else
        out.session->models.init_params();
    out.result = train(*out.session, out.data);
    return out;
}

} // namespace msgdd

#endif
