#ifndef MSGDD_METRICS_HPP
#define MSGDD_METRICS_HPP

#include "msgdd/dataset.hpp"
#include "msgdd/generator.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace msgdd {

// Pixel F1 (Dice) on binarized masks. Foreground = value > threshold.
// Conventions: both masks empty -> 1, exactly one empty -> 0.
template <typename Scalar>
double f1_score(const Image<Scalar>& pred, const Image<Scalar>& gt, Scalar threshold = Scalar(0)) {
    if (pred.height != gt.height || pred.width != gt.width || pred.channels != gt.channels)
        throw Error("evaluation", "prediction/ground-truth resolution mismatch");
    long long tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] > threshold;
        const bool g = gt.values[i] > Scalar(0);
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    if (tp == 0 && fp == 0 && fn == 0) return 1.0;
    if (2 * tp + fp + fn == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

struct MetricReport {
    std::vector<std::pair<std::string, double>> per_image; // (sample id, F1)
    double mean_f1 = 0;
    double threshold = 0;
    std::string split;
    std::string checkpoint_id;
};

// Deterministic per-image F1 over a split. Instance norm makes the generator
// batch-size invariant, so evaluation is chunked purely for memory reasons.
template <typename Scalar>
MetricReport evaluate(const GeneratorNet<Scalar>& net, const std::vector<PairedSample<Scalar>>& split,
                      const std::string& split_name, const std::string& checkpoint_id = "",
                      Scalar threshold = Scalar(0), int chunk = 16) {
    MetricReport report;
    report.threshold = static_cast<double>(threshold);
    report.split = split_name;
    report.checkpoint_id = checkpoint_id;
    double sum = 0;
    for (size_t begin = 0; begin < split.size(); begin += chunk) {
        const size_t end = std::min(split.size(), begin + chunk);
        std::vector<Image<Scalar>> inputs;
        for (size_t i = begin; i < end; ++i) inputs.push_back(split[i].input);
        auto outputs = generate_batch(net, inputs);
        for (size_t i = begin; i < end; ++i) {
            const double f1 = f1_score(outputs[i - begin].output, split[i].target, threshold);
            report.per_image.push_back({split[i].id, f1});
            sum += f1;
        }
    }
    report.mean_f1 = split.empty() ? 0.0 : sum / static_cast<double>(split.size());
    return report;
}

inline void write_metric_report(const MetricReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream csv(fs::path(dir) / ("per_image_" + report.split + ".csv"));
        csv << "id,f1\n";
        for (const auto& [id, f1] : report.per_image) csv << id << "," << format_double(f1) << "\n";
    }
    std::ofstream summary(fs::path(dir) / ("summary_" + report.split + ".txt"));
    summary << "split=" << report.split << "\n"
            << "checkpoint=" << report.checkpoint_id << "\n"
            << "threshold=" << format_double(report.threshold) << "\n"
            << "images=" << report.per_image.size() << "\n"
            << "mean_f1=" << format_double(report.mean_f1) << "\n";
}

} // namespace msgdd

#endif
