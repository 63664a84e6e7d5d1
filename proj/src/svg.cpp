#include "steamnet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace steamnet::svg {
namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish()
    {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Round tick spacing (1, 2 or 5 times a power of ten).
double nice_step(double span, int target)
{
    const double raw = span / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw)
            return m * mag;
    return 10.0 * mag;
}

std::string num(double v)
{
    if (v == 0.0)
        v = 0.0; // prints -0 as 0
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

} // namespace

std::string palette(std::size_t i)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % (sizeof(colors) / sizeof(colors[0]))];
}

std::string render(const Chart& chart)
{
    const int left = 70, right = 170, top = 40, gap = 50;
    const int plot_w = chart.width - left - right;
    const int n_panels = std::max<int>(1, static_cast<int>(chart.panels.size()));
    const int height = top + n_panels * (chart.panel_height + gap) + 10;

    Range xr;
    for (const auto& p : chart.panels) {
        for (const auto& s : p.series)
            for (double v : s.x)
                xr.add(v);
        for (double v : p.band_x)
            xr.add(v);
    }
    xr.finish();

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << chart.width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << chart.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(chart.title) << "</text>\n";

    std::vector<Panel> panels = chart.panels;
    if (panels.empty())
        panels.emplace_back();
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const Panel& p = panels[pi];
        const int y0 = top + static_cast<int>(pi) * (chart.panel_height + gap);
        const int ph = chart.panel_height;
        Range yr;
        for (const auto& s : p.series)
            for (double v : s.y)
                yr.add(v);
        std::vector<double> stack(p.band_x.size(), 0.0);
        for (const auto& b : p.bands)
            for (std::size_t k = 0; k < stack.size() && k < b.y.size(); ++k) {
                stack[k] += b.y[k];
                yr.add(stack[k]);
            }
        if (!p.bands.empty())
            yr.add(0.0);
        yr.finish();
        const double pad = 0.05 * (yr.hi - yr.lo);
        yr.lo -= pad;
        yr.hi += pad;
        auto X = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
        auto Y = [&](double y) { return y0 + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

        o << "<g>\n<text x=\"" << left << "\" y=\"" << y0 - 8 << "\" font-size=\"12\">" << escape(p.title)
          << "</text>\n";
        o << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\"" << ph
          << "\" fill=\"none\" stroke=\"#444\"/>\n";
        const double ys = nice_step(yr.hi - yr.lo, 5);
        for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi; t += ys) {
            o << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << num(Y(t)) << "\" y2=\""
              << num(Y(t)) << "\" stroke=\"#e5e5e5\"/>";
            o << "<text x=\"" << left - 6 << "\" y=\"" << num(Y(t) + 4) << "\" text-anchor=\"end\">" << num(t)
              << "</text>\n";
        }
        const double xs = nice_step(xr.hi - xr.lo, 8);
        for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi; t += xs)
            o << "<text x=\"" << num(X(t)) << "\" y=\"" << y0 + ph + 14 << "\" text-anchor=\"middle\">" << num(t)
              << "</text>\n";
        o << "<text transform=\"translate(" << 16 << ',' << y0 + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
          << escape(p.y_label) << "</text>\n";
        if (pi + 1 == panels.size())
            o << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << y0 + ph + 30 << "\" text-anchor=\"middle\">"
              << escape(chart.x_label) << "</text>\n";

        int legend = 0;
        std::vector<double> base(p.band_x.size(), 0.0);
        for (const auto& b : p.bands) {
            if (p.band_x.empty())
                break;
            std::ostringstream pts;
            std::vector<double> topv(base);
            for (std::size_t k = 0; k < topv.size() && k < b.y.size(); ++k)
                topv[k] += b.y[k];
            for (std::size_t k = 0; k < topv.size(); ++k) {
                pts << num(X(p.band_x[k])) << ',' << num(Y(topv[k])) << ' ';
                if (k + 1 < topv.size())
                    pts << num(X(p.band_x[k + 1])) << ',' << num(Y(topv[k])) << ' ';
            }
            for (std::size_t k = topv.size(); k-- > 0;) {
                if (k + 1 < topv.size())
                    pts << num(X(p.band_x[k + 1])) << ',' << num(Y(base[k])) << ' ';
                pts << num(X(p.band_x[k])) << ',' << num(Y(base[k])) << ' ';
            }
            o << "<polygon points=\"" << pts.str() << "\" fill=\"" << b.color << "\" fill-opacity=\"0.75\" stroke=\"none\"/>\n";
            o << "<rect x=\"" << left + plot_w + 12 << "\" y=\"" << y0 + 6 + 16 * legend << "\" width=\"12\" height=\"10\" fill=\""
              << b.color << "\"/><text x=\"" << left + plot_w + 30 << "\" y=\"" << y0 + 15 + 16 * legend << "\">"
              << escape(b.name) << "</text>\n";
            ++legend;
            base = topv;
        }
        for (const auto& s : p.series) {
            const std::size_t n = std::min(s.x.size(), s.y.size());
            if (n > 0) {
                std::ostringstream pts;
                for (std::size_t k = 0; k < n; ++k) {
                    pts << num(X(s.x[k])) << ',' << num(Y(s.y[k])) << ' ';
                    if (s.step && k + 1 < n)
                        pts << num(X(s.x[k + 1])) << ',' << num(Y(s.y[k])) << ' ';
                }
                o << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << s.color
                  << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,4\"" : "") << "/>\n";
            }
            if (s.name.empty())
                continue; // unlabelled companion of the previous series
            o << "<line x1=\"" << left + plot_w + 12 << "\" x2=\"" << left + plot_w + 26 << "\" y1=\""
              << y0 + 11 + 16 * legend << "\" y2=\"" << y0 + 11 + 16 * legend << "\" stroke=\"" << s.color
              << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"4,3\"" : "") << "/><text x=\""
              << left + plot_w + 30 << "\" y=\"" << y0 + 15 + 16 * legend << "\">" << escape(s.name) << "</text>\n";
            ++legend;
        }
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace steamnet::svg
