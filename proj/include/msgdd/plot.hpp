#ifndef MSGDD_PLOT_HPP
#define MSGDD_PLOT_HPP

#include "msgdd/types.hpp"

#include <string>
#include <vector>

namespace msgdd {

struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

MetricsTable read_metrics_csv(const std::string& path);

// Renders the per-epoch generator losses from a metrics CSV: adversarial term
// in blue, L1 term in orange, shared linear axis over epochs.
void render_loss_curves(const MetricsTable& metrics, const std::string& png_path);

// One row of network images: input, encoder taps (fine to coarse), decoder
// taps, output, ground truth. Every cell is upscaled to the input resolution.
void write_tap_grid(const std::string& path, const ImageF& input, const std::vector<ImageF>& enc_taps,
                    const std::vector<ImageF>& dec_taps, const ImageF& output, const ImageF& gt);

} // namespace msgdd

#endif
