#include "nlcl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace nlcl {

namespace {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("render_loss_curves: cannot read " + path.string());
    }
    Table t;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("render_loss_curves: empty CSV " + path.string());
    }
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
        t.columns.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            values.push_back(std::stod(cell));
        }
        if (values.size() != t.columns.size()) {
            throw std::runtime_error("render_loss_curves: ragged CSV row in " + path.string());
        }
        t.rows.push_back(std::move(values));
    }
    if (t.rows.empty()) {
        throw std::runtime_error("render_loss_curves: no data rows in " + path.string());
    }
    return t;
}

}  // namespace

void render_loss_curves(const std::filesystem::path& csv_path,
                        const std::filesystem::path& out_png) {
    const Table t = read_csv(csv_path);
    const int width = 960;
    const int height = 600;
    const int margin_l = 70, margin_r = 170, margin_t = 30, margin_b = 50;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

    const size_t n_series = t.columns.size() - 1;
    double x_min = t.rows.front()[0];
    double x_max = t.rows.back()[0];
    if (x_max <= x_min) {
        x_max = x_min + 1.0;
    }
    double y_min = 0.0;
    double y_max = -1e300;
    for (const auto& row : t.rows) {
        for (size_t s = 1; s < row.size(); ++s) {
            y_min = std::min(y_min, row[s]);
            y_max = std::max(y_max, row[s]);
        }
    }
    if (y_max <= y_min) {
        y_max = y_min + 1.0;
    }

    auto px = [&](double x) {
        return margin_l + static_cast<int>((x - x_min) / (x_max - x_min) *
                                           (width - margin_l - margin_r));
    };
    auto py = [&](double y) {
        return height - margin_b -
               static_cast<int>((y - y_min) / (y_max - y_min) * (height - margin_t - margin_b));
    };

    const cv::Scalar palette[] = {
        {180, 119, 31}, {14, 127, 255}, {44, 160, 44},   {40, 39, 214},
        {189, 103, 148}, {75, 86, 140}, {194, 119, 227}, {127, 127, 127},
    };

    // axes and horizontal guides
    cv::rectangle(canvas, {margin_l, margin_t}, {width - margin_r, height - margin_b},
                  cv::Scalar(180, 180, 180));
    for (int g = 0; g <= 4; ++g) {
        const double y = y_min + (y_max - y_min) * g / 4.0;
        const int yy = py(y);
        cv::line(canvas, {margin_l, yy}, {width - margin_r, yy}, cv::Scalar(235, 235, 235));
        char label[32];
        std::snprintf(label, sizeof(label), "%.3g", y);
        cv::putText(canvas, label, {5, yy + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                    cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
    }
    for (int g = 0; g <= 4; ++g) {
        const double x = x_min + (x_max - x_min) * g / 4.0;
        char label[32];
        std::snprintf(label, sizeof(label), "%.0f", x);
        cv::putText(canvas, label, {px(x) - 10, height - margin_b + 20}, cv::FONT_HERSHEY_SIMPLEX,
                    0.4, cv::Scalar(60, 60, 60), 1, cv::LINE_AA);
    }
    cv::putText(canvas, "step", {width / 2 - 20, height - 10}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(60, 60, 60), 1, cv::LINE_AA);

    for (size_t s = 0; s < n_series; ++s) {
        const auto& colour = palette[s % std::size(palette)];
        for (size_t r = 1; r < t.rows.size(); ++r) {
            cv::line(canvas, {px(t.rows[r - 1][0]), py(t.rows[r - 1][s + 1])},
                     {px(t.rows[r][0]), py(t.rows[r][s + 1])}, colour, 1, cv::LINE_AA);
        }
        const int ly = margin_t + 18 * static_cast<int>(s) + 12;
        cv::line(canvas, {width - margin_r + 10, ly - 4}, {width - margin_r + 35, ly - 4}, colour,
                 2);
        cv::putText(canvas, t.columns[s + 1], {width - margin_r + 40, ly},
                    cv::FONT_HERSHEY_SIMPLEX, 0.42, cv::Scalar(30, 30, 30), 1, cv::LINE_AA);
    }

    if (!out_png.parent_path().empty()) {
        std::filesystem::create_directories(out_png.parent_path());
    }
    if (!cv::imwrite(out_png.string(), canvas)) {
        throw std::runtime_error("render_loss_curves: cannot write " + out_png.string());
    }
}

void write_matches_jsonl(const std::vector<MatchResult>& matches,
                         const std::filesystem::path& out_path) {
    if (!out_path.parent_path().empty()) {
        std::filesystem::create_directories(out_path.parent_path());
    }
    std::ofstream out(out_path);
    if (!out) {
        throw std::runtime_error("write_matches_jsonl: cannot write " + out_path.string());
    }
    for (const auto& m : matches) {
        nlohmann::json j;
        j["query"] = m.query;
        j["indices"] = m.indices;
        j["distances"] = m.distances;
        out << j.dump() << "\n";
    }
}

void write_match_montage(const Image& source, const PatchGrid& grid, const MatchResult& match,
                         const std::filesystem::path& out_png) {
    if (source.height != grid.image_height || source.width != grid.image_width) {
        throw std::invalid_argument("write_match_montage: grid was not built on this image");
    }
    constexpr int kScale = 4;
    constexpr int kGap = 2;
    const int tile = grid.patch * kScale;
    const int n = 1 + static_cast<int>(match.indices.size());
    Image montage(tile, n * tile + (n - 1) * kGap, source.channels, 1.0f);

    auto blit = [&](int slot, int patch_index) {
        const auto [top, left] = grid.positions.at(patch_index);
        const int x0 = slot * (tile + kGap);
        for (int y = 0; y < tile; ++y) {
            for (int x = 0; x < tile; ++x) {
                for (int c = 0; c < source.channels; ++c) {
                    montage.at(y, x0 + x, c) = source.at(top + y / kScale, left + x / kScale, c);
                }
            }
        }
    };
    blit(0, match.query);
    for (size_t i = 0; i < match.indices.size(); ++i) {
        blit(static_cast<int>(i) + 1, match.indices[i]);
    }
    save_png(out_png, montage, 8);
}

}  // namespace nlcl
