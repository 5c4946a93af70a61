#include "ucgan/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ucgan::io {

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("report: cannot write " + path);
    return out;
}

}  // namespace

void write_classifier_history_csv(const std::string& path, const std::vector<clf::HistoryRow>& rows) {
    auto out = open_out(path);
    out << "epoch,train_acc,val_acc,train_loss,val_loss\n";
    for (const auto& r : rows)
        out << r.epoch << ',' << r.train_acc << ',' << r.val_acc << ',' << r.train_loss << ',' << r.val_loss << '\n';
}

void write_gan_history_csv(const std::string& path, const std::vector<gan::StepLog>& rows) {
    auto out = open_out(path);
    out << "step,d_loss,g_loss,r1,d_real_mean,d_fake_mean\n";
    for (const auto& r : rows)
        out << r.step << ',' << r.d_loss << ',' << r.g_loss << ',' << r.r1 << ',' << r.d_real_mean << ','
            << r.d_fake_mean << '\n';
}

void write_sweep_csvs(const std::string& pairs_path, const std::string& summary_path, const eval::SweepReport& report) {
    {
        auto out = open_out(pairs_path);
        out << "m_in,sample_idx,label,pred,m_out\n";
        for (const auto& row : report.rows)
            for (size_t j = 0; j < row.samples.size(); ++j)
                out << row.m_in << ',' << j << ',' << row.samples[j].label << ',' << row.samples[j].pred << ','
                    << row.samples[j].m_out << '\n';
    }
    {
        auto out = open_out(summary_path);
        out << "m_in,mean_out,std_out,n\n";
        for (const auto& row : report.rows)
            out << row.m_in << ',' << row.mean_out << ',' << row.std_out << ',' << row.n << '\n';
        out << "pearson_r," << report.pearson_r << '\n';
    }
}

void write_edit_csv(const std::string& path, const eval::EditTrajectory& traj) {
    auto out = open_out(path);
    out << "step,m_in,m_out\n";
    for (size_t i = 0; i < traj.m_in.size(); ++i) out << i << ',' << traj.m_in[i] << ',' << traj.m_out[i] << '\n';
    out << "monotonicity_score," << traj.monotonicity_score << '\n';
}

namespace {

struct SvgFrame {
    double x0, x1, y0, y1;  // data range
    static constexpr int w = 640, h = 480, margin = 50;
    double px(double x) const { return margin + (x - x0) / (x1 - x0) * (w - 2 * margin); }
    double py(double y) const { return h - margin - (y - y0) / (y1 - y0) * (h - 2 * margin); }
};

void svg_header(std::ofstream& out) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << SvgFrame::w << "\" height=\"" << SvgFrame::h
        << "\" viewBox=\"0 0 " << SvgFrame::w << ' ' << SvgFrame::h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void svg_axes(std::ofstream& out, const SvgFrame& f, const std::string& xlabel, const std::string& ylabel) {
    out << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x1) << "\" y2=\""
        << f.py(f.y0) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(f.x0) << "\" y2=\""
        << f.py(f.y1) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << SvgFrame::w / 2 << "\" y=\"" << SvgFrame::h - 12 << "\" text-anchor=\"middle\" font-size=\"14\">"
        << xlabel << "</text>\n"
        << "<text x=\"14\" y=\"" << SvgFrame::h / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 14 "
        << SvgFrame::h / 2 << ")\">" << ylabel << "</text>\n";
}

}  // namespace

void write_sweep_svg(const std::string& path, const eval::SweepReport& report) {
    auto out = open_out(path);
    double lo = 1.0, hi = 0.0;
    for (const auto& row : report.rows) {
        lo = std::min(lo, row.m_in);
        hi = std::max(hi, row.m_in);
        for (const auto& s : row.samples) {
            lo = std::min(lo, s.m_out);
            hi = std::max(hi, s.m_out);
        }
    }
    SvgFrame f{lo - 0.02, hi + 0.02, lo - 0.02, hi + 0.02};
    svg_header(out);
    svg_axes(out, f, "m_in", "m_out");
    out << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(f.x0) << "\" x2=\"" << f.px(f.x1) << "\" y2=\""
        << f.py(f.x1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
    for (const auto& row : report.rows)
        for (const auto& s : row.samples)
            out << "<circle cx=\"" << f.px(row.m_in) << "\" cy=\"" << f.py(s.m_out)
                << "\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.35\"/>\n";
    out << "<text x=\"" << SvgFrame::w - 180 << "\" y=\"24\" font-size=\"13\">pearson_r = " << report.pearson_r
        << "</text>\n</svg>\n";
}

void write_points_svg(const std::string& path, const std::vector<std::pair<double, double>>& pts,
                      const std::vector<double>& shade, const std::string& xlabel, const std::string& ylabel) {
    auto out = open_out(path);
    double x0 = 1e30, x1 = -1e30, y0 = 1e30, y1 = -1e30;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.first);
        x1 = std::max(x1, p.first);
        y0 = std::min(y0, p.second);
        y1 = std::max(y1, p.second);
    }
    if (pts.empty()) x0 = y0 = 0, x1 = y1 = 1;
    SvgFrame f{x0 - 0.1, x1 + 0.1, y0 - 0.1, y1 + 0.1};
    svg_header(out);
    svg_axes(out, f, xlabel, ylabel);
    for (size_t i = 0; i < pts.size(); ++i) {
        const double s = i < shade.size() ? std::clamp(shade[i], 0.0, 1.0) : 0.5;
        const int r = static_cast<int>(40 + 215 * (1.0 - s));
        const int b = static_cast<int>(40 + 215 * s);
        out << "<circle cx=\"" << f.px(pts[i].first) << "\" cy=\"" << f.py(pts[i].second) << "\" r=\"2\" fill=\"rgb("
            << r << ",60," << b << ")\" fill-opacity=\"0.6\"/>\n";
    }
    out << "</svg>\n";
}

void write_pgm_grid(const std::string& path, const std::vector<Tensor>& images, int64_t rows, int64_t cols) {
    if (images.empty() || rows * cols < static_cast<int64_t>(images.size()))
        throw std::invalid_argument("pgm: grid smaller than image count");
    const int64_t ih = images[0].shape[images[0].rank() - 2];
    const int64_t iw = images[0].shape[images[0].rank() - 1];
    constexpr int64_t sep = 2;
    const int64_t W = cols * iw + (cols - 1) * sep;
    const int64_t H = rows * ih + (rows - 1) * sep;
    std::vector<unsigned char> canvas(static_cast<size_t>(W * H), 0);

    for (size_t i = 0; i < images.size(); ++i) {
        const int64_t r = static_cast<int64_t>(i) / cols, c = static_cast<int64_t>(i) % cols;
        const int64_t oy = r * (ih + sep), ox = c * (iw + sep);
        const Tensor& img = images[i];
        if (img.numel() != ih * iw) throw std::invalid_argument("pgm: inconsistent image sizes");
        for (int64_t y = 0; y < ih; ++y)
            for (int64_t x = 0; x < iw; ++x) {
                const double v = std::clamp(img.values[static_cast<size_t>(y * iw + x)], 0.0, 1.0);
                canvas[static_cast<size_t>((oy + y) * W + ox + x)] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
    }

    auto out = open_out(path, true);
    out << "P5\n" << W << ' ' << H << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.data()), static_cast<std::streamsize>(canvas.size()));
}

void write_grid_annotations_csv(const std::string& path, const eval::GridResult& grid) {
    auto out = open_out(path);
    out << "index,label,pred,prob,m\n";
    for (size_t i = 0; i < grid.labels.size(); ++i)
        out << i << ',' << grid.labels[i] << ',' << grid.preds[i] << ',' << grid.probs[i] << ',' << grid.m << '\n';
}

void write_corruption_manifest_csv(const std::string& path, const std::vector<data::CorruptionAssignment>& rows,
                                   uint64_t seed) {
    auto out = open_out(path);
    out << "# seed," << seed << '\n';
    out << "index,corrupted,kind,severity\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << i << ',' << (r.corrupted ? 1 : 0) << ','
            << (r.corrupted ? (r.kind == data::CorruptionKind::GaussianNoise ? "gaussian_noise" : "gaussian_blur") : "-")
            << ',' << (r.corrupted ? std::to_string(r.severity) : "-") << '\n';
    }
}

}  // namespace ucgan::io
