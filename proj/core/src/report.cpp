#include "aogtrack/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

#include "json.hpp"

namespace aog {

namespace {

std::string fmt(double v, int digits = 6) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

}  // namespace

RunSummary summarize(const EvalRun& run, const Sequence& seq) {
    RunSummary s;
    s.sequence = run.sequence;
    s.protocol = run.protocol;
    s.attributes = seq.attributes;
    s.variants = run.variants.size();
    s.success = success_curve(run, seq);
    s.precision = precision_curve(run, seq);
    for (const Variant& v : run.variants) s.seconds += v.seconds;
    s.warnings = run.warnings;
    return s;
}

RunSummary summarize(const VotResult& vot, const Sequence& seq, double seconds) {
    RunSummary s;
    s.sequence = seq.name;
    s.protocol = Protocol::Vot;
    s.attributes = seq.attributes;
    s.variants = 1;
    s.success = success_curve(vot.predicted, seq.ground_truth);
    s.precision = precision_curve(vot.predicted, seq.ground_truth);
    s.vot = vot;
    s.seconds = seconds;
    return s;
}

std::string run_csv(const RunSummary& run) {
    std::ostringstream os;
    os << "metric,threshold,value\n";
    for (std::size_t i = 0; i < run.success.rates.size(); ++i)
        os << "success," << fmt(run.success.thresholds[i], 2) << ',' << fmt(run.success.rates[i]) << '\n';
    for (std::size_t i = 0; i < run.precision.rates.size(); ++i)
        os << "precision," << fmt(run.precision.thresholds[i], 0) << ',' << fmt(run.precision.rates[i]) << '\n';
    os << "auc,," << fmt(run.success.summary) << '\n';
    os << "precision@20,," << fmt(run.precision.summary) << '\n';
    if (run.vot) {
        os << "vot_accuracy,," << fmt(run.vot->accuracy) << '\n';
        os << "vot_failures,," << run.vot->failures << '\n';
    }
    return os.str();
}

std::string aggregate_csv(std::span<const RunSummary> runs) {
    std::ostringstream os;
    os << "group,name,protocol,runs,auc,precision@20\n";
    for (const auto& r : runs)
        os << "sequence," << r.sequence << ',' << protocol_name(r.protocol) << ",1," << fmt(r.success.summary) << ','
           << fmt(r.precision.summary) << '\n';
    std::map<std::pair<std::string, std::string>, std::vector<const RunSummary*>> by_attr;
    for (const auto& r : runs)
        for (const auto& a : r.attributes) by_attr[{a, protocol_name(r.protocol)}].push_back(&r);
    for (const auto& [key, members] : by_attr) {
        double auc = 0.0, prec = 0.0;
        for (const auto* m : members) {
            auc += m->success.summary;
            prec += m->precision.summary;
        }
        const double n = double(members.size());
        os << "attribute," << key.first << ',' << key.second << ',' << members.size() << ',' << fmt(auc / n) << ','
           << fmt(prec / n) << '\n';
    }
    return os.str();
}

std::string plot_svg(std::span<const RunSummary> runs) {
    constexpr double W = 320, H = 240, M = 40;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * (W + 2 * M) << "\" height=\"" << H + 2 * M
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    auto panel = [&](int k, const char* title, const char* xlabel, double xmax, bool success) {
        const double ox = k * (W + 2 * M) + M;
        os << "<g>\n<rect x=\"" << ox << "\" y=\"" << M << "\" width=\"" << W << "\" height=\"" << H
           << "\" fill=\"none\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ox + W / 2 << "\" y=\"" << M - 12 << "\" text-anchor=\"middle\">" << title << "</text>\n";
        os << "<text x=\"" << ox + W / 2 << "\" y=\"" << M + H + 28 << "\" text-anchor=\"middle\">" << xlabel
           << "</text>\n";
        for (int t = 0; t <= 4; ++t) {
            const double y = M + H - H * t / 4.0;
            os << "<text x=\"" << ox - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(t / 4.0, 2)
               << "</text>\n";
            const double x = ox + W * t / 4.0;
            os << "<text x=\"" << x << "\" y=\"" << M + H + 14 << "\" text-anchor=\"middle\">"
               << fmt(xmax * t / 4.0, success ? 2 : 0) << "</text>\n";
        }
        for (std::size_t r = 0; r < runs.size(); ++r) {
            const Curve& c = success ? runs[r].success : runs[r].precision;
            os << "<polyline fill=\"none\" stroke=\"" << colors[r % 6] << "\" points=\"";
            for (std::size_t i = 0; i < c.rates.size(); ++i)
                os << fmt(ox + W * c.thresholds[i] / xmax, 2) << ',' << fmt(M + H - H * c.rates[i], 2) << ' ';
            os << "\"/>\n";
            os << "<text x=\"" << ox + W - 4 << "\" y=\"" << M + 14 + 13 * r << "\" text-anchor=\"end\" fill=\""
               << colors[r % 6] << "\">" << runs[r].sequence << ' ' << protocol_name(runs[r].protocol) << " ["
               << fmt(c.summary, 3) << "]</text>\n";
        }
        os << "</g>\n";
    };
    panel(0, "Success plot", "Overlap threshold", 1.0, true);
    panel(1, "Precision plot", "Location error threshold (px)", 50.0, false);
    os << "</svg>\n";
    return os.str();
}

std::string manifest_json(std::span<const RunSummary> runs, const ReportInfo& info,
                          std::span<const std::string> files) {
    nlohmann::ordered_json j;
    j["engine_version"] = info.version;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(info.config_hash));
    j["config_hash"] = hash;
    if (!info.config_json.empty()) j["config"] = nlohmann::ordered_json::parse(info.config_json);
    j["files"] = files;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& r : runs) {
        nlohmann::ordered_json e;
        e["sequence"] = r.sequence;
        e["protocol"] = protocol_name(r.protocol);
        e["attributes"] = std::vector<std::string>(r.attributes.begin(), r.attributes.end());
        e["variants"] = r.variants;
        e["auc"] = r.success.summary;
        e["precision_at_20"] = r.precision.summary;
        if (r.vot) {
            e["vot_accuracy"] = r.vot->accuracy;
            e["vot_failures"] = r.vot->failures;
        }
        e["wall_seconds"] = r.seconds;
        e["warnings"] = r.warnings;
        list.push_back(std::move(e));
    }
    j["runs"] = std::move(list);
    return j.dump(2) + "\n";
}

std::vector<std::string> emit_report(std::span<const RunSummary> runs, const std::filesystem::path& out_dir,
                                     const ReportInfo& info) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;
    for (const auto& r : runs) {
        const std::string name = r.sequence + "_" + protocol_name(r.protocol) + ".csv";
        write_file(out_dir / name, run_csv(r));
        files.push_back(name);
    }
    if (runs.size() >= 2) {
        write_file(out_dir / "aggregate.csv", aggregate_csv(runs));
        files.push_back("aggregate.csv");
    }
    write_file(out_dir / "plots.svg", plot_svg(runs));
    files.push_back("plots.svg");
    files.push_back("manifest.json");
    write_file(out_dir / "manifest.json", manifest_json(runs, info, files));
    return files;
}

std::string tracking_csv(std::span<const FrameResult> results) {
    std::ostringstream os;
    os << "frame_index,x,y,w,h,score,valid,searched_whole_frame,trackability\n";
    for (const auto& r : results) {
        const Box b = r.valid ? r.box : Box::invalid();
        os << r.frame << ',' << fmt(b.x, 2) << ',' << fmt(b.y, 2) << ',' << fmt(b.w, 2) << ',' << fmt(b.h, 2) << ','
           << (r.valid ? fmt(r.score) : "nan") << ',' << int(r.valid) << ',' << int(r.whole_frame) << ','
           << (r.valid ? fmt(r.trackability) : "nan") << '\n';
    }
    return os.str();
}

cv::Mat render_result(const cv::Mat& frame, const FrameResult& result) {
    cv::Mat out;
    if (frame.channels() == 1)
        cv::cvtColor(frame, out, cv::COLOR_GRAY2BGR);
    else
        out = frame.clone();
    auto rect = [](const Box& b) {
        return cv::Rect(cv::Point(int(std::lround(b.x)), int(std::lround(b.y))),
                        cv::Point(int(std::lround(b.right())), int(std::lround(b.bottom()))));
    };
    if (result.valid) {
        for (const Box& p : result.parts) cv::rectangle(out, rect(p), cv::Scalar(255, 200, 0), 1);
        cv::rectangle(out, rect(result.box), cv::Scalar(0, 0, 255), 2);
    }
    cv::putText(out, std::to_string(result.frame) + (result.whole_frame ? " W" : ""), {4, 14},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 255, 255), 1);
    return out;
}

}  // namespace aog
