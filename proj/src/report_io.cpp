#include "splitnls/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splitnls {

void JsonBuf::comma() {
    if (!need_comma_.empty()) {
        if (need_comma_.back()) out_ += ',';
        need_comma_.back() = true;
    }
}

void JsonBuf::begin_object() {
    comma();
    out_ += '{';
    need_comma_.push_back(false);
}

void JsonBuf::end_object() {
    out_ += '}';
    need_comma_.pop_back();
}

void JsonBuf::begin_array() {
    comma();
    out_ += '[';
    need_comma_.push_back(false);
}

void JsonBuf::end_array() {
    out_ += ']';
    need_comma_.pop_back();
}

void JsonBuf::key(const std::string& k) {
    comma();
    out_ += '"';
    out_ += json_escape(k);
    out_ += "\":";
    need_comma_.back() = false;  // the upcoming value completes this member
}

void JsonBuf::value(double v) {
    comma();
    out_ += format_double(v);
}

void JsonBuf::value_int(long long v) {
    comma();
    out_ += std::to_string(v);
}

void JsonBuf::value_uint(unsigned long long v) {
    comma();
    out_ += std::to_string(v);
}

void JsonBuf::value(bool v) {
    comma();
    out_ += v ? "true" : "false";
}

void JsonBuf::value(const std::string& s) {
    comma();
    out_ += '"';
    out_ += json_escape(s);
    out_ += '"';
}

void JsonBuf::null_value() {
    comma();
    out_ += "null";
}

void JsonBuf::raw(const std::string& preformatted_json) {
    comma();
    out_ += preformatted_json;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) throw std::logic_error("format_double: non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void emit_rate(JsonBuf& b, const RateFit& fit) {
    b.begin_object();
    b.key("excluded");
    b.begin_array();
    for (int i : fit.excluded) b.value_int(i);
    b.end_array();
    b.key("intercept");
    b.value(fit.intercept);
    b.key("pairwise");
    b.begin_array();
    for (double s : fit.pairwise) b.value(s);
    b.end_array();
    b.key("slope");
    b.value(fit.slope);
    b.key("valid");
    b.value(fit.valid);
    b.end_object();
}

}  // namespace

std::string report_json(const ExperimentReport& rep, const ExperimentConfig& cfg) {
    JsonBuf b;
    b.begin_object();
    b.key("complete");
    b.value(rep.complete);
    b.key("config");
    b.raw(canonical_config_json(cfg));
    b.key("config_hash");
    b.value(config_hash(cfg));
    b.key("experiment");
    b.value(rep.experiment);
    b.key("flags");
    b.begin_object();
    for (const auto& [k, v] : rep.flags) {
        b.key(k);
        b.value(v);
    }
    b.end_object();
    b.key("metric_names");
    b.begin_array();
    for (const auto& n : rep.metric_names) b.value(n);
    b.end_array();
    b.key("pass");
    b.value(rep.pass);
    b.key("rates");
    b.begin_object();
    for (const auto& [k, v] : rep.rates) {
        b.key(k);
        emit_rate(b, v);
    }
    b.end_object();
    b.key("reference_uncertainty");
    b.begin_array();
    for (double u : rep.reference_uncertainty) b.value(u);
    b.end_array();
    b.key("rows");
    b.begin_array();
    for (const auto& row : rep.rows) {
        b.begin_object();
        b.key("cutoff_inactive");
        b.value(row.cutoff_inactive);
        b.key("invalid_reason");
        b.value(row.invalid_reason);
        b.key("l2_max_rel_drift");
        b.value(row.l2_max_rel_drift);
        b.key("l2_max_step_increase");
        b.value(row.l2_max_step_increase);
        b.key("metrics");
        b.begin_array();
        for (double m : row.metrics) b.value(m);
        b.end_array();
        b.key("tau");
        b.value(row.tau);
        b.key("valid");
        b.value(row.valid);
        b.end_object();
    }
    b.end_array();
    b.key("scalars");
    b.begin_object();
    for (const auto& [k, v] : rep.scalars) {
        b.key(k);
        b.value(v);
    }
    b.end_object();
    b.key("schema");
    b.value(std::string("split-nls-report-v1"));
    b.key("warnings");
    b.begin_array();
    for (const auto& w : rep.warnings) b.value(w);
    b.end_array();
    b.end_object();
    return b.str() + "\n";
}

std::string report_csv(const ExperimentReport& rep) {
    std::string out = "tau,metric,value,valid,wall_ms\n";
    char buf[160];
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < rep.metric_names.size(); ++i) {
            const double v = i < row.metrics.size() ? row.metrics[i] : 0.0;
            std::snprintf(buf, sizeof buf, "%.12e,%s,%.12e,%d,%.12e\n", row.tau,
                          rep.metric_names[i].c_str(), v, row.valid ? 1 : 0, row.wall_ms);
            out += buf;
        }
    }
    return out;
}

namespace {

struct PlotPoint {
    double x, y;
    std::size_t series;
};

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string report_svg(const ExperimentReport& rep) {
    const int W = 800, H = 600;
    const double x0 = 90, x1 = W - 40, y0 = H - 70, y1 = 50;  // plot frame
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"18\">" << rep.experiment << "</text>\n";

    std::vector<PlotPoint> pts;
    double lxmin = 0, lxmax = 0, lymin = 0, lymax = 0;
    bool any = false;
    for (const auto& row : rep.rows) {
        if (!row.valid || !(row.tau > 0.0)) continue;
        for (std::size_t i = 0; i < row.metrics.size(); ++i) {
            if (!(row.metrics[i] > 0.0) || !std::isfinite(row.metrics[i])) continue;
            const double lx = std::log10(row.tau), ly = std::log10(row.metrics[i]);
            if (!any) {
                lxmin = lxmax = lx;
                lymin = lymax = ly;
                any = true;
            } else {
                lxmin = std::min(lxmin, lx);
                lxmax = std::max(lxmax, lx);
                lymin = std::min(lymin, ly);
                lymax = std::max(lymax, ly);
            }
            pts.push_back({lx, ly, i});
        }
    }
    if (!any) {
        s << "<text x=\"" << W / 2 << "\" y=\"" << H / 2
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
          << "no positive data to plot</text>\n</svg>\n";
        return s.str();
    }
    if (lxmax - lxmin < 1e-9) {
        lxmin -= 0.5;
        lxmax += 0.5;
    }
    if (lymax - lymin < 1e-9) {
        lymin -= 0.5;
        lymax += 0.5;
    }
    const double padx = 0.05 * (lxmax - lxmin), pady = 0.08 * (lymax - lymin);
    lxmin -= padx;
    lxmax += padx;
    lymin -= pady;
    lymax += pady;
    auto X = [&](double lx) { return x0 + (lx - lxmin) / (lxmax - lxmin) * (x1 - x0); };
    auto Y = [&](double ly) { return y0 - (ly - lymin) / (lymax - lymin) * (y0 - y1); };

    s << "<rect x=\"" << svg_num(x0) << "\" y=\"" << svg_num(y1) << "\" width=\""
      << svg_num(x1 - x0) << "\" height=\"" << svg_num(y0 - y1)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Decade ticks on both axes.
    for (int e = static_cast<int>(std::ceil(lxmin)); e <= static_cast<int>(std::floor(lxmax));
         ++e) {
        const double px = X(e);
        s << "<line x1=\"" << svg_num(px) << "\" y1=\"" << svg_num(y0) << "\" x2=\""
          << svg_num(px) << "\" y2=\"" << svg_num(y0 + 6) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << svg_num(px) << "\" y=\"" << svg_num(y0 + 22)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1e" << e
          << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(lymin)); e <= static_cast<int>(std::floor(lymax));
         ++e) {
        const double py = Y(e);
        s << "<line x1=\"" << svg_num(x0 - 6) << "\" y1=\"" << svg_num(py) << "\" x2=\""
          << svg_num(x0) << "\" y2=\"" << svg_num(py) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << svg_num(x0 - 10) << "\" y=\"" << svg_num(py + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">1e" << e
          << "</text>\n";
    }
    s << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << H - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">tau</text>\n";

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};
    const std::size_t ncolor = sizeof(colors) / sizeof(colors[0]);

    // Fitted line for the first metric that has a valid fit.
    for (std::size_t i = 0; i < rep.metric_names.size(); ++i) {
        auto it = rep.rates.find(rep.metric_names[i]);
        if (it == rep.rates.end() || !it->second.valid) continue;
        const double ln10 = std::log(10.0);
        auto fit_ly = [&](double lx) {
            return (it->second.slope * (lx * ln10) + it->second.intercept) / ln10;
        };
        s << "<line x1=\"" << svg_num(X(lxmin)) << "\" y1=\"" << svg_num(Y(fit_ly(lxmin)))
          << "\" x2=\"" << svg_num(X(lxmax)) << "\" y2=\"" << svg_num(Y(fit_ly(lxmax)))
          << "\" stroke=\"" << colors[i % ncolor]
          << "\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
        break;
    }

    // Per-series polylines and markers.
    for (std::size_t i = 0; i < rep.metric_names.size(); ++i) {
        std::string poly;
        for (const auto& p : pts)
            if (p.series == i)
                poly += svg_num(X(p.x)) + "," + svg_num(Y(p.y)) + " ";
        if (!poly.empty())
            s << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\""
              << colors[i % ncolor] << "\" stroke-width=\"1\"/>\n";
        for (const auto& p : pts)
            if (p.series == i)
                s << "<circle cx=\"" << svg_num(X(p.x)) << "\" cy=\"" << svg_num(Y(p.y))
                  << "\" r=\"4\" fill=\"" << colors[i % ncolor] << "\"/>\n";
        // Legend.
        const double ly = y1 + 16 + 18 * static_cast<double>(i);
        s << "<circle cx=\"" << svg_num(x0 + 12) << "\" cy=\"" << svg_num(ly - 4)
          << "\" r=\"4\" fill=\"" << colors[i % ncolor] << "\"/>\n";
        s << "<text x=\"" << svg_num(x0 + 22) << "\" y=\"" << svg_num(ly)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << rep.metric_names[i]
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace splitnls
