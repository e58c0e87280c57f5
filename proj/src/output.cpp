#include "lab/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_fields_csv(std::ostream& os, const Mesh& mesh, const std::vector<NamedField>& fields) {
    os << "node_id,x";
    if (mesh.dim == 2) os << ",y";
    for (const auto& f : fields) os << ',' << f.name;
    os << '\n';
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        os << k << ',' << format_double(mesh.nodes[k].x);
        if (mesh.dim == 2) os << ',' << format_double(mesh.nodes[k].y);
        for (const auto& f : fields) os << ',' << format_double((*f.values)[k]);
        os << '\n';
    }
}

namespace {

std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string svg_line_plot(const Mesh& mesh, const std::string& title, const std::vector<PlotSeries>& series) {
    const double W = 640, H = 400, L = 60, R = 150, T = 30, B = 40;
    double lo = 0.0, hi = 0.0;
    for (const auto& s : series)
        for (double v : s.values)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (hi - lo < 1e-300) hi = lo + 1.0;
    auto X = [&](double x) { return L + x * (W - L - R); };
    auto Y = [&](double v) { return T + (hi - v) / (hi - lo) * (H - T - B); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
    os << "<line x1=\"" << X(0) << "\" y1=\"" << fixed(Y(0)) << "\" x2=\"" << X(1) << "\" y2=\"" << fixed(Y(0))
       << "\" stroke=\"#999\"/>\n";
    os << "<text x=\"5\" y=\"" << fixed(Y(hi) + 4) << "\" font-size=\"10\">" << format_double(hi) << "</text>\n";
    os << "<text x=\"5\" y=\"" << fixed(Y(lo) + 4) << "\" font-size=\"10\">" << format_double(lo) << "</text>\n";
    int row = 0;
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) os << " stroke-dasharray=\"5,3\"";
        os << " points=\"";
        for (std::size_t k = 0; k < mesh.n_nodes(); ++k)
            os << fixed(X(mesh.nodes[k].x)) << ',' << fixed(Y(s.values[k])) << ' ';
        os << "\"/>\n";
        const double ly = T + 14.0 * row++;
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
        os << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_heatmap(const Mesh& mesh, const std::string& title, const std::vector<double>& values) {
    const double cell = std::max(2.0, 400.0 / std::max(mesh.nx, mesh.ny));
    const double top = 30.0;
    double amax = 0.0;
    for (double v : values)
        if (std::isfinite(v)) amax = std::max(amax, std::fabs(v));
    if (amax == 0.0) amax = 1.0;
    std::ostringstream os;
    const double W = cell * (mesh.nx + 1), H = top + cell * (mesh.ny + 1);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(W) << "\" height=\"" << fixed(H)
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"4\" y=\"18\" font-size=\"13\">" << escape(title) << " (|max| " << format_double(amax)
       << ")</text>\n";
    for (std::size_t k = 0; k < mesh.n_nodes(); ++k) {
        const auto [i, j] = mesh.grid_index[k];
        // diverging map: blue negative, red positive
        const double s = std::clamp(values[k] / amax, -1.0, 1.0);
        const int r = s > 0 ? 255 : static_cast<int>(255 * (1 + s));
        const int b = s < 0 ? 255 : static_cast<int>(255 * (1 - s));
        const int g = static_cast<int>(255 * (1 - std::fabs(s)));
        os << "<rect x=\"" << fixed(i * cell) << "\" y=\"" << fixed(top + (mesh.ny - j) * cell) << "\" width=\""
           << fixed(cell) << "\" height=\"" << fixed(cell) << "\" fill=\"rgb(" << r << ',' << g << ',' << b
           << ")\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace lab
