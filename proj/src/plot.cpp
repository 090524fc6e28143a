#include "msgdd/plot.hpp"

#include "msgdd/config.hpp"
#include "msgdd/pngio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace msgdd {

namespace {

// 5x7 glyphs, 5 LSBs per row, MSB = left column. Subset sufficient for axis
// numbers and the loss legend.
const std::map<char, std::array<std::uint8_t, 7>>& font() {
    static const std::map<char, std::array<std::uint8_t, 7>> glyphs = {
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x0E, 0x11, 0x01, 0x06, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
        {'7', {0x1F, 0x01, 0x02, 0x04, 0x04, 0x04, 0x04}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
        {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x06, 0x06}},
        {'-', {0x00, 0x00, 0x00, 0x0E, 0x00, 0x00, 0x00}},
        {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
        {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
        {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
        {'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
        {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
        {'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
        {'h', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x11}},
        {'l', {0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x06}},
        {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
        {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
        {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0E}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    };
    return glyphs;
}

struct Rgb {
    std::uint8_t r, g, b;
};

const Rgb kWhite{255, 255, 255};
const Rgb kBlack{20, 20, 20};
const Rgb kGrid{225, 225, 225};
const Rgb kBlue{31, 119, 180};
const Rgb kOrange{255, 127, 14};

struct Canvas {
    int w, h;
    std::vector<std::uint8_t> rgb;

    Canvas(int width, int height) : w(width), h(height), rgb(static_cast<size_t>(width) * height * 3) {
        fill(kWhite);
    }

    void fill(Rgb c) {
        for (size_t i = 0; i < rgb.size(); i += 3) {
            rgb[i] = c.r;
            rgb[i + 1] = c.g;
            rgb[i + 2] = c.b;
        }
    }

    void set(int x, int y, Rgb c) {
        if (x < 0 || x >= w || y < 0 || y >= h) return;
        const size_t i = (static_cast<size_t>(y) * w + x) * 3;
        rgb[i] = c.r;
        rgb[i + 1] = c.g;
        rgb[i + 2] = c.b;
    }

    void hline(int x0, int x1, int y, Rgb c) {
        for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
    }
    void vline(int x, int y0, int y1, Rgb c) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
    }

    void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1) {
        int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            for (int t = 0; t < thickness; ++t) set(x0, y0 + t, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void text(int x, int y, const std::string& s, Rgb c, int scale = 1) {
        int cx = x;
        for (char ch : s) {
            auto it = font().find(ch);
            if (it == font().end()) it = font().find(' ');
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (it->second[row] & (1 << (4 - col)))
                        for (int sy = 0; sy < scale; ++sy)
                            for (int sx = 0; sx < scale; ++sx)
                                set(cx + col * scale + sx, y + row * scale + sy, c);
            cx += 6 * scale;
        }
    }
};

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

} // namespace

MetricsTable read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot open metrics CSV '" + path + "'");
    MetricsTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error("cli", "metrics CSV '" + path + "' is empty");
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::strtod(cell.c_str(), nullptr));
        if (values.size() != table.columns.size())
            throw Error("cli", "metrics CSV row has " + std::to_string(values.size()) +
                                   " cells, header has " + std::to_string(table.columns.size()));
        table.rows.push_back(std::move(values));
    }
    if (table.rows.empty()) throw Error("cli", "metrics CSV '" + path + "' has no data rows");
    return table;
}

void render_loss_curves(const MetricsTable& metrics, const std::string& png_path) {
    const int col_epoch = metrics.column("epoch");
    const int col_dis = metrics.column("l_g_dis");
    const int col_l1 = metrics.column("l_g_l1");
    if (col_epoch < 0 || col_dis < 0 || col_l1 < 0)
        throw Error("cli", "metrics CSV lacks epoch/l_g_dis/l_g_l1 columns");

    const int W = 960, H = 640;
    const int left = 70, right = W - 30, top = 40, bottom = H - 60;
    Canvas canvas(W, H);

    double x_min = metrics.rows.front()[col_epoch], x_max = metrics.rows.back()[col_epoch];
    if (x_max <= x_min) x_max = x_min + 1;
    double y_max = 0;
    for (const auto& row : metrics.rows) y_max = std::max({y_max, row[col_dis], row[col_l1]});
    if (y_max <= 0) y_max = 1;
    y_max *= 1.05;

    auto px = [&](double e) {
        return left + static_cast<int>(std::lround((e - x_min) / (x_max - x_min) * (right - left)));
    };
    auto py = [&](double v) {
        return bottom - static_cast<int>(std::lround(v / y_max * (bottom - top)));
    };

    const int x_ticks = std::min<int>(8, static_cast<int>(x_max - x_min));
    for (int t = 0; t <= std::max(1, x_ticks); ++t) {
        const double e = x_min + (x_max - x_min) * t / std::max(1, x_ticks);
        canvas.vline(px(e), top, bottom, kGrid);
        const std::string label = tick_label(std::round(e));
        canvas.text(px(e) - static_cast<int>(label.size()) * 3, bottom + 8, label, kBlack);
    }
    for (int t = 0; t <= 5; ++t) {
        const double v = y_max * t / 5;
        canvas.hline(left, right, py(v), kGrid);
        const std::string label = tick_label(v);
        canvas.text(left - 6 - static_cast<int>(label.size()) * 6, py(v) - 3, label, kBlack);
    }
    canvas.hline(left, right, bottom, kBlack);
    canvas.vline(left, top, bottom, kBlack);
    canvas.text((left + right) / 2 - 15, H - 30, "epoch", kBlack);
    canvas.text(8, top - 25, "loss", kBlack);

    auto draw_series = [&](int col, Rgb color) {
        for (size_t i = 1; i < metrics.rows.size(); ++i)
            canvas.line(px(metrics.rows[i - 1][col_epoch]), py(metrics.rows[i - 1][col]),
                        px(metrics.rows[i][col_epoch]), py(metrics.rows[i][col]), color, 2);
        if (metrics.rows.size() == 1)
            canvas.set(px(metrics.rows[0][col_epoch]), py(metrics.rows[0][col]), color);
    };
    draw_series(col_dis, kBlue);
    draw_series(col_l1, kOrange);

    canvas.hline(right - 150, right - 120, top + 10, kBlue);
    canvas.hline(right - 150, right - 120, top + 11, kBlue);
    canvas.text(right - 112, top + 7, "L_GDis", kBlack);
    canvas.hline(right - 150, right - 120, top + 28, kOrange);
    canvas.hline(right - 150, right - 120, top + 29, kOrange);
    canvas.text(right - 112, top + 25, "L_GL1", kBlack);

    write_png_rgb(png_path, H, W, canvas.rgb.data());
}

namespace {

// nearest-neighbour upscale to the cell size, channels averaged to gray
void blit_cell(std::vector<std::uint8_t>& out, int out_w, int cell, int x0, const ImageF& im) {
    for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x) {
            const int sy = y * im.height / cell;
            const int sx = x * im.width / cell;
            float v = 0;
            for (int c = 0; c < im.channels; ++c) v += im.at(c, sy, sx);
            v /= static_cast<float>(im.channels);
            const double byte = std::clamp((static_cast<double>(v) + 1.0) * 127.5, 0.0, 255.0);
            out[static_cast<size_t>(y) * out_w + x0 + x] = static_cast<std::uint8_t>(byte + 0.5);
        }
}

} // namespace

void write_tap_grid(const std::string& path, const ImageF& input, const std::vector<ImageF>& enc_taps,
                    const std::vector<ImageF>& dec_taps, const ImageF& output, const ImageF& gt) {
    const int cell = input.height;
    const int gap = 2;
    const int cells = 3 + static_cast<int>(enc_taps.size() + dec_taps.size());
    const int out_w = cells * cell + (cells - 1) * gap;
    std::vector<std::uint8_t> gray(static_cast<size_t>(cell) * out_w, 255);

    int x0 = 0;
    auto put = [&](const ImageF& im) {
        blit_cell(gray, out_w, cell, x0, im);
        x0 += cell + gap;
    };
    put(input);
    for (const auto& tap : enc_taps) put(tap);
    for (const auto& tap : dec_taps) put(tap);
    put(output);
    put(gt);
    write_png_gray(path, cell, out_w, gray.data());
}

} // namespace msgdd
