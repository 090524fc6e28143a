#include "msgdd/cli.hpp"

#include "msgdd/ablation.hpp"
#include "msgdd/gradcheck.hpp"
#include "msgdd/plot.hpp"
#include "msgdd/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace msgdd {

namespace {

const char* kUsage = R"(usage: msgdd <verb> [options]

verbs:
  train   --config FILE [--resume CKPT] [--KEY VALUE ...]
          train a model; writes checkpoints, metrics.csv and optional tap grids
  eval    --checkpoint CKPT [--config FILE] [--split train|val|test] [--KEY VALUE ...]
          per-image F1 report for one checkpoint
  ablate  --config FILE [--variants a,b,c] [--out FILE] [--KEY VALUE ...]
          train + evaluate variants with one budget; writes a comparison table
  synth   --out DIR [--count N] [--resolution R] [--seed S]
          materialize a synthetic ellipse dataset in the images/+masks/ layout
  probe   --config FILE [--checkpoint CKPT] [--out FILE] [--KEY VALUE ...]
          per-block generator gradient norms (full / adversarial-only / tap-ablated)
          add --finite-diff [--fd-params N] [--fd-step H] for the numeric check
  plot    METRICS_CSV [--out FILE]
          render the two generator loss curves from a metrics CSV

Any config key (see configs/) can be passed as --KEY VALUE to override the file.
)";

struct Args {
    std::string verb;
    std::vector<std::pair<std::string, std::string>> named; // in order
    std::vector<std::string> positional;

    bool has(const std::string& key) const {
        for (const auto& [k, v] : named)
            if (k == key) return true;
        return false;
    }
    std::string get(const std::string& key, const std::string& fallback = "") const {
        for (const auto& [k, v] : named)
            if (k == key) return v;
        return fallback;
    }
};

const std::vector<std::string> kBoolFlags = {"finite-diff"};

Args parse_args(int argc, const char* const* argv) {
    Args args;
    if (argc >= 2) args.verb = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string a = argv[i];
        if (a.rfind("--", 0) == 0) {
            a = a.substr(2);
            const size_t eq = a.find('=');
            if (eq != std::string::npos) {
                args.named.push_back({a.substr(0, eq), a.substr(eq + 1)});
            } else if (std::find(kBoolFlags.begin(), kBoolFlags.end(), a) != kBoolFlags.end()) {
                args.named.push_back({a, "true"});
            } else if (i + 1 < argc) {
                args.named.push_back({a, argv[++i]});
            } else {
                throw Error("cli", "flag --" + a + " needs a value");
            }
        } else {
            args.positional.push_back(a);
        }
    }
    return args;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Verb-specific flags; everything else must be a config key.
RunConfig assemble_config(const Args& args, const std::vector<std::string>& reserved,
                          const std::string& base_text = "") {
    RunConfig cfg;
    const std::string config_path = args.get("config");
    if (!config_path.empty())
        cfg = parse_config(read_file(config_path));
    else if (!base_text.empty())
        cfg = parse_config(base_text);
    for (const auto& [k, v] : args.named) {
        if (k == "config" || std::find(reserved.begin(), reserved.end(), k) != reserved.end())
            continue;
        set_config_key(cfg, k, v);
    }
    return cfg;
}

RunConfig validated_or_die(const RunConfig& cfg) {
    ValidationResult vr = validate_config(cfg);
    if (!vr.ok()) {
        for (const auto& e : vr.errors) std::cerr << "config error: " << e << "\n";
        throw Error("cli", "invalid configuration (" + std::to_string(vr.errors.size()) + " problem(s))");
    }
    return vr.config;
}

std::string run_summary_text(const RunConfig& cfg, const TrainResult& res) {
    std::ostringstream out;
    out << "run_summary\n"
        << "status=completed\n"
        << "variant=" << cfg.variant << "\n"
        << "seed=" << cfg.seed << "\n"
        << "epochs=" << cfg.optimizer.epochs << "\n"
        << "best_val_f1=" << format_double(res.best_val_f1) << "\n"
        << "best_epoch=" << res.best_epoch << "\n"
        << "final_val_f1=" << format_double(res.final_val_f1) << "\n"
        << "checkpoint_best=" << res.best_checkpoint << "\n"
        << "checkpoint_last=" << res.last_checkpoint << "\n"
        << "metrics_csv=" << res.metrics_csv << "\n";
    return out.str();
}

int cmd_train(const Args& args) {
    RunConfig cfg = validated_or_die(assemble_config(args, {"resume"}));
    try {
        RunOutput<float> run = train_run<float>(cfg, args.get("resume"));
        std::cout << run_summary_text(cfg, run.result);
    } catch (const TrainAbort& abort) {
        std::cout << "run_summary\n"
                  << "status=aborted\n"
                  << "variant=" << cfg.variant << "\n"
                  << "seed=" << cfg.seed << "\n"
                  << "aborted_at_epoch=" << abort.epoch << "\n"
                  << "aborted_at_step=" << abort.step << "\n"
                  << "non_finite_term=" << abort.term << "\n";
        std::cerr << "error: " << abort.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_eval(const Args& args) {
    const std::string ckpt_path = args.get("checkpoint");
    if (ckpt_path.empty()) throw Error("cli", "eval needs --checkpoint");
    Checkpoint<float> ckpt = load_checkpoint<float>(ckpt_path);
    RunConfig cfg = validated_or_die(assemble_config(args, {"checkpoint", "split"}, ckpt.config_text));

    DatasetManifest manifest{cfg.dataset_root, cfg.train_count, cfg.val_count, cfg.test_count,
                             cfg.image_size};
    DatasetSplits<float> data = load_dataset<float>(manifest);
    TrainSession<float> session(cfg);
    restore_session(session, ckpt);

    const std::string split = args.get("split", "test");
    const std::vector<PairedSample<float>>* samples = nullptr;
    if (split == "train")
        samples = &data.train;
    else if (split == "val")
        samples = &data.val;
    else if (split == "test")
        samples = &data.test;
    else
        throw Error("cli", "unknown split '" + split + "'");
    MetricReport report = evaluate(session.models.gen, *samples, split, ckpt_path);
    write_metric_report(report, cfg.out_dir);
    std::cout << "split=" << split << "\n"
              << "images=" << report.per_image.size() << "\n"
              << "mean_f1=" << format_double(report.mean_f1) << "\n";
    return 0;
}

int cmd_ablate(const Args& args) {
    RunConfig cfg = validated_or_die(assemble_config(args, {"variants", "out"}));
    std::vector<std::string> variants;
    std::stringstream list(args.get("variants", "msgdd_4l1,pix2pix_like,unet_only"));
    std::string item;
    while (std::getline(list, item, ','))
        if (!item.empty()) variants.push_back(item);
    if (variants.empty()) throw Error("cli", "ablate needs at least one variant");
    for (const auto& v : variants) apply_variant(cfg, v); // fail fast on bad names

    std::vector<AblationRow> rows = run_ablation<float>(cfg, variants);
    const std::string csv_path =
        args.get("out", (std::filesystem::path(cfg.out_dir) / "ablation.csv").string());
    write_ablation_csv(rows, csv_path);
    std::cout << "variant,test_mean_f1\n";
    for (const auto& r : rows) std::cout << r.variant << "," << format_double(r.test_mean_f1) << "\n";
    std::cout << "table=" << csv_path << "\n";
    return 0;
}

int cmd_synth(const Args& args) {
    const std::string out_dir = args.get("out");
    if (out_dir.empty()) throw Error("cli", "synth needs --out");
    const int count = std::stoi(args.get("count", "350"));
    const int resolution = std::stoi(args.get("resolution", "64"));
    const std::uint64_t seed = std::stoull(args.get("seed", "0"));
    auto samples = synth_shapes<float>(count, resolution, seed);
    materialize_dataset(out_dir, samples);
    std::cout << "wrote " << samples.size() << " pairs at " << resolution << "x" << resolution
              << " to " << out_dir << "\n";
    return 0;
}

int cmd_probe(const Args& args) {
    RunConfig cfg = validated_or_die(
        assemble_config(args, {"checkpoint", "out", "finite-diff", "fd-params", "fd-step"}));

    if (args.get("finite-diff") == "true") {
        const int n_params = std::stoi(args.get("fd-params", "50"));
        const double step = std::stod(args.get("fd-step", "0.001"));
        FiniteDiffResult fd = finite_diff_check(cfg, n_params, step);
        std::cout << "params_checked=" << fd.params_checked << "\n"
                  << "max_rel_err_gen=" << format_double(fd.max_rel_err_gen) << "\n"
                  << "max_rel_err_dis=" << format_double(fd.max_rel_err_dis) << "\n";
        return 0;
    }

    TrainSession<float> session(cfg);
    const std::string ckpt_path = args.get("checkpoint");
    if (!ckpt_path.empty())
        restore_session(session, load_checkpoint<float>(ckpt_path));
    else
        session.models.init_params();

    std::vector<PairedSample<float>> batch;
    if (!cfg.dataset_root.empty()) {
        DatasetManifest manifest{cfg.dataset_root, cfg.train_count, cfg.val_count, cfg.test_count,
                                 cfg.image_size};
        DatasetSplits<float> data = load_dataset<float>(manifest);
        const size_t n = std::min<size_t>(data.train.size(), cfg.optimizer.batch_size);
        batch.assign(data.train.begin(), data.train.begin() + n);
    } else {
        batch = synth_shapes<float>(std::min(cfg.optimizer.batch_size, 8), cfg.image_size, cfg.seed);
    }

    ProbeOptions full{true, false, cfg.lambda_l1};
    ProbeOptions adv_only{false, false, cfg.lambda_l1};
    ProbeOptions ablated{true, true, cfg.lambda_l1};
    GradProbeReport rep_full = grad_probe(session.models, batch, full);
    GradProbeReport rep_adv = grad_probe(session.models, batch, adv_only);
    GradProbeReport rep_abl = grad_probe(session.models, batch, ablated);

    const std::string csv_path =
        args.get("out", (std::filesystem::path(cfg.out_dir) / "grad_probe.csv").string());
    namespace fs = std::filesystem;
    if (fs::path(csv_path).has_parent_path()) fs::create_directories(fs::path(csv_path).parent_path());
    std::ofstream csv(csv_path);
    if (!csv) throw Error("cli", "cannot write probe table '" + csv_path + "'");
    csv << "block,norm_full,norm_adv_only,norm_tap_ablated\n";
    for (size_t i = 0; i < rep_full.blocks.size(); ++i)
        csv << rep_full.blocks[i].first << "," << format_double(rep_full.blocks[i].second) << ","
            << format_double(rep_adv.blocks[i].second) << ","
            << format_double(rep_abl.blocks[i].second) << "\n";
    std::cout << "blocks=" << rep_full.blocks.size() << "\n"
              << "table=" << csv_path << "\n";
    return 0;
}

int cmd_plot(const Args& args) {
    std::string csv = args.get("metrics");
    if (csv.empty() && !args.positional.empty()) csv = args.positional.front();
    if (csv.empty()) throw Error("cli", "plot needs a metrics CSV path");
    const std::string out =
        args.get("out", (std::filesystem::path(csv).parent_path() / "loss_curves.png").string());
    render_loss_curves(read_metrics_csv(csv), out);
    std::cout << "plot=" << out << "\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    try {
        Args args = parse_args(argc, argv);
        if (args.verb.empty() || args.verb == "help" || args.verb == "--help") {
            std::cout << kUsage;
            return args.verb.empty() ? 2 : 0;
        }
        if (args.verb == "train") return cmd_train(args);
        if (args.verb == "eval") return cmd_eval(args);
        if (args.verb == "ablate") return cmd_ablate(args);
        if (args.verb == "synth") return cmd_synth(args);
        if (args.verb == "probe") return cmd_probe(args);
        if (args.verb == "plot") return cmd_plot(args);
        std::cerr << "error: unknown verb '" << args.verb << "'\n" << kUsage;
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace msgdd
