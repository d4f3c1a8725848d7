// Command-line front end: AOG counting, detection, learning, tracking and
// benchmark evaluation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>

#include "CLI11.hpp"

#include "aogtrack/aog.hpp"
#include "aogtrack/config.hpp"
#include "aogtrack/evaluation.hpp"
#include "aogtrack/learner.hpp"
#include "aogtrack/model.hpp"
#include "aogtrack/parser.hpp"
#include "aogtrack/report.hpp"
#include "aogtrack/sequence.hpp"
#include "aogtrack/session.hpp"
#include "aogtrack/synthetic.hpp"
#include "aogtrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace aog;

namespace {

Box parse_box(const std::string& text) {
    std::string t = text;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::istringstream is(t);
    Box b;
    if (!(is >> b.x >> b.y >> b.w >> b.h) || !b.valid()) throw CLI::ValidationError("box", "expected x,y,w,h");
    return b;
}

struct Overrides {
    std::string config;
    int relearn_cap = -1;
    int grid_side = -1;
    double lsvm_c = -1.0;

    void add(CLI::App* app) {
        app->add_option("--config", config, "JSON file overriding engine constants");
        app->add_option("--relearn-cap", relearn_cap, "Frames used when re-learning the structure");
        app->add_option("--grid-side", grid_side, "Cells on the shorter side of the object grid (0 = auto)");
        app->add_option("--lsvm-c", lsvm_c, "Hinge loss weight C");
    }

    EngineConfig build() const {
        EngineConfig cfg = config.empty() ? EngineConfig{} : load_config_file(config);
        if (relearn_cap >= 0) cfg.learner.relearn_cap = relearn_cap;
        if (grid_side >= 0) cfg.learner.grid_side = grid_side;
        if (lsvm_c > 0) cfg.learner.C = lsvm_c;
        return cfg;
    }
};

int count_aog(const std::string& grid, int min_part, double overlap, std::uint64_t budget) {
    int w = 0, h = 0;
    if (std::sscanf(grid.c_str(), "%dx%d", &w, &h) != 2) throw CLI::ValidationError("--grid", "expected WxH");
    GridSpec spec{w, h, min_part, min_part, overlap};
    const auto t0 = std::chrono::steady_clock::now();
    const Aog g = build_full_aog(spec);
    const BigCount trees = count_parse_trees(g);
    const auto configs = count_configurations(g, budget);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "grid " << w << "x" << h << " min-part " << min_part << " overlap " << overlap << "\n"
              << "nodes " << g.size() << "\n"
              << "or-nodes " << g.count(NodeKind::Or) << "\n"
              << "and-nodes " << g.count(NodeKind::And) << "\n"
              << "decomposition-and-nodes " << g.decomposition_count() << "\n"
              << "terminals " << g.count(NodeKind::Terminal) << "\n"
              << "part-terminals " << g.part_terminal_count() << "\n"
              << "parse-trees " << trees << "\n"
              << "configurations " << (configs ? std::to_string(*configs) : std::string("over-budget")) << "\n"
              << "seconds " << secs << "\n";
    return 0;
}

int parse_image(const std::string& model_path, const std::string& image_path, const Box& around, double threshold,
                const EngineConfig& cfg) {
    const Model m = load_model_file(model_path);
    const cv::Mat img = cv::imread(image_path, cv::IMREAD_COLOR);
    if (img.empty()) throw std::runtime_error("cannot read " + image_path);
    const FeaturePyramid pyr = window_pyramid(m, img, cv::Rect(0, 0, img.cols, img.rows), m.box_to_window(around),
                                              cfg.tracker.level_band + m.layout.part_level_offset,
                                              cfg.tracker.level_band);
    ParseOptions opts;
    opts.threshold = std::isnan(threshold) ? m.threshold : threshold;
    opts.nms_iou = cfg.parser.nms_iou;
    opts.n_best = cfg.parser.n_best;
    opts.radius = cfg.parser.radius;
    opts.min_level = m.layout.part_level_offset;
    std::cout << "x,y,w,h,score,terminals\n";
    for (const Detection& d : parse(m, pyr, opts)) {
        const Box b = m.window_to_box(d.window);
        std::cout << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ',' << d.score << ','
                  << d.tree.terminals(m.aog).size() << '\n';
    }
    return 0;
}

int learn(const std::string& image_path, const Box& box, const std::string& out, const EngineConfig& cfg) {
    const cv::Mat img = cv::imread(image_path, cv::IMREAD_COLOR);
    if (img.empty()) throw std::runtime_error("cannot read " + image_path);
    const TrainingDataset ds = init_dataset(img, box, cfg.features.cell_size);
    const std::vector<int> frames{0};
    const LearnResult r = learn_object_aog(ds, frames, box, cfg);
    save_model_file(r.model, out);
    std::cerr << "accepted " << r.report.accepted << " twice-resolution " << r.report.twice_resolution
              << " object-only " << r.report.object_only << " nodes " << r.report.full_nodes << " -> "
              << r.report.initial_nodes << " -> " << r.report.final_nodes << " threshold " << r.model.threshold
              << "\n";
    return 0;
}

int track(const std::string& sequence_dir, const std::string& format, bool synthetic, const std::string& init,
          const std::string& out, const std::string& render, const EngineConfig& cfg) {
    Sequence seq;
    if (synthetic) {
        seq = make_synthetic_sequence();
    } else {
        const auto fmt = parse_sequence_format(format);
        if (!fmt) throw CLI::ValidationError("--format", "tb or vot");
        seq = load_sequence(sequence_dir, *fmt);
    }
    const Box start = init.empty() ? seq.ground_truth.at(0) : parse_box(init);
    if (!render.empty()) fs::create_directories(render);

    const auto t0 = std::chrono::steady_clock::now();
    AogTracker tracker(cfg);
    const cv::Mat first = seq.frame(0);
    tracker.init(first, start);
    for (std::size_t i = 1; i < seq.size(); ++i) {
        const FrameResult r = tracker.track(seq.frame(i));
        if (r.relearned) std::cerr << "frame " << i << ": structure re-learned\n";
    }
    const std::vector<FrameResult> results = tracker.finish();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string csv = tracking_csv(results);
    if (out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream os(out);
        os << csv;
    }
    if (!render.empty()) {
        for (std::size_t i = 0; i < results.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%05zu.png", i);
            cv::imwrite((fs::path(render) / name).string(), render_result(seq.frame(i), results[i]));
        }
    }
    const Curve s = success_curve([&] {
        std::vector<Box> p;
        for (const auto& r : results) p.push_back(r.valid ? r.box : Box::invalid());
        return p;
    }(), seq.ground_truth);
    std::cerr << "frames " << results.size() << " seconds " << secs << " relearns " << tracker.relearn_count()
              << " auc " << s.summary << "\n";
    return 0;
}

int evaluate(const std::string& protocol, const std::string& dataset, const std::vector<std::string>& only,
             const std::string& format, const std::string& out, int threads, const EngineConfig& cfg) {
    const auto proto = parse_protocol(protocol);
    if (!proto) throw CLI::ValidationError("--protocol", "ope, sre, tre or vot");
    const auto fmt = parse_sequence_format(format);
    if (!fmt) throw CLI::ValidationError("--format", "tb or vot");
    const TrackerFactory factory = aog_tracker_factory(cfg);
    std::vector<RunSummary> runs;
    for (const fs::path& dir : list_sequences(dataset, only)) {
        const Sequence seq = load_sequence(dir, *fmt);
        std::cerr << "sequence " << seq.name << " (" << seq.size() << " frames)\n";
        if (*proto == Protocol::Vot) {
            const auto t0 = std::chrono::steady_clock::now();
            const VotResult v = run_vot(seq, factory);
            runs.push_back(
                summarize(v, seq, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()));
        } else {
            EvalRun run = *proto == Protocol::Ope   ? run_ope(seq, factory, threads)
                          : *proto == Protocol::Tre ? run_tre(seq, factory, threads)
                                                    : run_sre(seq, factory, threads);
            for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
            runs.push_back(summarize(run, seq));
        }
        std::cerr << "  auc " << runs.back().success.summary << " precision@20 " << runs.back().precision.summary
                  << "\n";
    }
    if (runs.empty()) throw std::runtime_error("no sequences found in " + dataset);
    const ReportInfo info{engine_version(), config_hash(cfg), config_to_json(cfg)};
    for (const auto& f : emit_report(runs, out, info)) std::cout << (fs::path(out) / f).string() << "\n";
    return 0;
}

int write_synthetic(const std::string& out) {
    const Sequence seq = make_synthetic_sequence();
    fs::create_directories(fs::path(out) / "img");
    std::ofstream gt(fs::path(out) / "groundtruth_rect.txt");
    for (std::size_t i = 0; i < seq.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.png", i + 1);
        cv::imwrite((fs::path(out) / "img" / name).string(), seq.images[i]);
        const Box& b = seq.ground_truth[i];
        if (b.valid())
            gt << b.x + 1 << ',' << b.y + 1 << ',' << b.w << ',' << b.h << '\n';
        else
            gt << "NaN,NaN,NaN,NaN\n";
    }
    std::ofstream attrs(fs::path(out) / "attributes.txt");
    for (const auto& a : seq.attributes) attrs << a << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AOG object tracker"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(engine_version()));
    int threads = 1;
    app.add_option("--threads", threads, "Worker threads for evaluation variants")->check(CLI::PositiveNumber);

    auto* c = app.add_subcommand("count-aog", "Count nodes, parse trees and configurations of a full AOG");
    std::string grid = "3x3";
    int min_part = 1;
    double overlap = 0.0;
    std::uint64_t budget = 50'000'000;
    c->add_option("--grid", grid, "Grid size WxH");
    c->add_option("--min-part", min_part, "Minimum part side in grid cells");
    c->add_option("--overlap", overlap, "Overlap ratio");
    c->add_option("--budget", budget, "Parse-tree budget for configuration enumeration");

    Overrides over;
    auto* p = app.add_subcommand("parse", "Detect an object with a saved model");
    std::string model_path, image_path, around;
    double threshold = std::nan("");
    p->add_option("--model", model_path)->required();
    p->add_option("--image", image_path)->required();
    p->add_option("--around", around, "Box x,y,w,h setting the search scale")->required();
    p->add_option("--threshold", threshold, "Score threshold (default: model threshold)");
    over.add(p);

    auto* l = app.add_subcommand("learn", "Learn an object AOG from one annotated image");
    std::string box_text, model_out;
    l->add_option("--image", image_path)->required();
    l->add_option("--box", box_text, "x,y,w,h")->required();
    l->add_option("--out", model_out)->required();
    over.add(l);

    auto* t = app.add_subcommand("track", "Track an object through a sequence");
    std::string seq_dir, format = "tb", init, out, render;
    bool synthetic = false;
    t->add_option("--sequence", seq_dir, "Sequence directory");
    t->add_flag("--synthetic", synthetic, "Use the built-in synthetic sequence");
    t->add_option("--format", format, "tb or vot");
    t->add_option("--init", init, "Initial box x,y,w,h (default: first ground truth)");
    t->add_option("--out", out, "CSV output file (default: stdout)");
    t->add_option("--render", render, "Directory for annotated frames");
    over.add(t);

    auto* e = app.add_subcommand("eval", "Run a benchmark protocol");
    std::string protocol = "ope", dataset, eval_out;
    std::vector<std::string> sequences;
    e->add_option("--protocol", protocol, "ope, sre, tre or vot");
    e->add_option("--dataset", dataset, "Directory of sequences")->required();
    e->add_option("--sequences", sequences, "Subset of sequence names")->delimiter(',');
    e->add_option("--format", format, "tb or vot");
    e->add_option("--out", eval_out, "Report directory")->required();
    over.add(e);

    auto* s = app.add_subcommand("make-synthetic", "Write the synthetic sequence in tb format");
    std::string synth_out;
    s->add_option("--out", synth_out)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (c->parsed()) return count_aog(grid, min_part, overlap, budget);
        if (p->parsed()) return parse_image(model_path, image_path, parse_box(around), threshold, over.build());
        if (l->parsed()) return learn(image_path, parse_box(box_text), model_out, over.build());
        if (t->parsed()) {
            if (seq_dir.empty() && !synthetic) throw CLI::ValidationError("track", "--sequence or --synthetic");
            return track(seq_dir, format, synthetic, init, out, render, over.build());
        }
        if (e->parsed()) return evaluate(protocol, dataset, sequences, format, eval_out, threads, over.build());
        if (s->parsed()) return write_synthetic(synth_out);
    } catch (const CLI::Error& err) {
        return app.exit(err);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
