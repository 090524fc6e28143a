#ifndef MSGDD_ABLATION_HPP
#define MSGDD_ABLATION_HPP

#include "msgdd/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace msgdd {

inline const std::vector<std::string>& known_variants() {
    static const std::vector<std::string> names = {"msgdd_4l1", "msgdd_2l1", "msgdd_1l1",
                                                   "pix2pix_like", "unet_only"};
    return names;
}

// Config delta for one ablation variant over a shared base run.
inline RunConfig apply_variant(RunConfig base, const std::string& name) {
    if (name == "msgdd_4l1") {
        base.variant = "msgdd";
        base.k_l1 = 4;
    } else if (name == "msgdd_2l1") {
        base.variant = "msgdd";
        base.k_l1 = 2;
    } else if (name == "msgdd_1l1") {
        base.variant = "msgdd";
        base.k_l1 = 1;
    } else if (name == "pix2pix_like" || name == "unet_only") {
        base.variant = name;
    } else {
        throw Error("evaluation", "unknown ablation variant '" + name + "'");
    }
    return base;
}

struct AblationRow {
    std::string variant;
    double test_mean_f1 = 0;
    double best_val_f1 = 0;
    int best_epoch = 0;
};

// Trains every variant with the identical budget (same seed, dataset, epoch
// count), evaluates the best-validation checkpoint on the test split.
template <typename Scalar>
std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<std::string>& variants) {
    namespace fs = std::filesystem;
    std::vector<AblationRow> rows;
    for (const std::string& name : variants) {
        RunConfig cfg = apply_variant(base, name);
        cfg.out_dir = (fs::path(base.out_dir) / name).string();
        RunOutput<Scalar> run = train_run<Scalar>(cfg);
        restore_session(*run.session, load_checkpoint<Scalar>(run.result.best_checkpoint));
        MetricReport report = evaluate(run.session->models.gen, run.data.test, "test",
                                       run.result.best_checkpoint);
        rows.push_back({name, report.mean_f1, run.result.best_val_f1, run.result.best_epoch});
    }
    return rows;
}

inline void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw Error("evaluation", "cannot write ablation table '" + path + "'");
    out << "variant,test_mean_f1,best_val_f1,best_epoch\n";
    for (const auto& r : rows)
        out << r.variant << "," << format_double(r.test_mean_f1) << "," << format_double(r.best_val_f1)
            << "," << r.best_epoch << "\n";
}

} // namespace msgdd

#endif
