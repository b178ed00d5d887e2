#pragma once

#include <string>
#include <vector>

#include "splitnls/config.hpp"

namespace splitnls {

// Minimal JSON emitter used for every serialized artifact. Keys are written in
// the order given; callers keep them sorted. Doubles print with %.17g so the
// value survives a parse round trip bit for bit; non-finite values are a logic
// error. Output carries no whitespace except a trailing newline added by the
// document-level helpers, so equal inputs yield byte-identical text.
class JsonBuf {
  public:
    void begin_object();
    void end_object();
    void begin_array();
    void end_array();
    void key(const std::string& k);
    void value(double v);
    void value_int(long long v);
    void value_uint(unsigned long long v);
    void value(bool v);
    void value(const std::string& s);
    void null_value();
    void raw(const std::string& preformatted_json);  // splice a serialized value
    const std::string& str() const { return out_; }

  private:
    void comma();
    std::string out_;
    std::vector<bool> need_comma_;
};

std::string json_escape(const std::string& s);
std::string format_double(double v);  // %.17g

// report.json: canonical config echo, metrics, fits, flags and verdict.
// Deterministic for equal (config, results); wall-clock times are excluded.
std::string report_json(const ExperimentReport& rep, const ExperimentConfig& cfg);

// rows.csv: one line per (row, metric): tau,metric,value,valid,wall_ms.
std::string report_csv(const ExperimentReport& rep);

// plot.svg: 800x600 log-log scatter of metrics against tau with decade ticks
// and the fitted line when a rate fit is present.
std::string report_svg(const ExperimentReport& rep);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace splitnls
