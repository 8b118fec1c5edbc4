#include "unlock/io.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "unlock/expansion.hpp"
#include "unlock/framework.hpp"
#include "unlock/pseudotri.hpp"

using nlohmann::json;

namespace unlock {

namespace {

int log_level() {
    static int level = [] {
        const char* env = std::getenv("UNLOCK_LOG");
        if (!env) return 0;
        std::string s(env);
        if (s == "debug") return 2;
        if (s == "info") return 1;
        return 0;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[info] " << msg << "\n";
}

}  // namespace

Linkage parse_linkage(const std::string& text, const ParseOptions& opts) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SyntaxError(std::string("linkage parse: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("chains") || !doc["chains"].is_array())
        throw StructuralError("linkage parse: expected an object with a \"chains\" array");
    Linkage l;
    int ci = 0;
    for (const auto& jc : doc["chains"]) {
        if (!jc.is_object() || !jc.contains("closed") || !jc.contains("vertices") ||
            !jc["closed"].is_boolean() || !jc["vertices"].is_array())
            throw StructuralError("chain " + std::to_string(ci) +
                                  ": expected {\"closed\": bool, \"vertices\": [[x,y],...]}");
        Chain c;
        c.closed = jc["closed"].get<bool>();
        for (const auto& jv : jc["vertices"]) {
            if (!jv.is_array() || jv.size() != 2 || !jv[0].is_number() || !jv[1].is_number())
                throw StructuralError("chain " + std::to_string(ci) +
                                      ": vertices must be [x, y] number pairs");
            c.vertices.push_back({jv[0].get<double>(), jv[1].get<double>()});
        }
        l.chains.push_back(std::move(c));
        ++ci;
    }
    std::string structural = validate_structure(l);
    if (!structural.empty()) throw StructuralError(structural);
    if (opts.check_simplicity) {
        if (auto v = find_simplicity_violation(l))
            throw SimplicityError("linkage is not simple: segments " +
                                  std::to_string(v->segment_a) + " and " +
                                  std::to_string(v->segment_b) + " intersect");
    }
    return l;
}

namespace {

json linkage_to_json(const Linkage& l) {
    json chains = json::array();
    for (const auto& c : l.chains) {
        json verts = json::array();
        for (const auto& v : c.vertices) verts.push_back({v.x, v.y});
        chains.push_back({{"closed", c.closed}, {"vertices", verts}});
    }
    return json{{"chains", chains}};
}

}  // namespace

std::string serialize_linkage(const Linkage& l) { return linkage_to_json(l).dump(); }

ViewBox viewbox_for(const Linkage& l) {
    auto pts = all_vertices(l);
    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (const auto& p : pts) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    double w = std::max(xmax - xmin, 1e-6), h = std::max(ymax - ymin, 1e-6);
    return {xmin - 0.1 * w, ymin - 0.1 * h, 1.2 * w, 1.2 * h};
}

ViewBox viewbox_for_trace(const MotionTrace& trace) {
    if (trace.frames.empty()) return {};
    return viewbox_for(trace.frames.back().config);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf"};

}  // namespace

std::string render_svg(const Linkage& config, const SvgStyle& style, const ViewBox& box) {
    double ref = std::max(box.width, box.height);
    double sw = style.stroke_width > 0 ? style.stroke_width : 0.008 * ref;
    double vr = style.vertex_radius > 0 ? style.vertex_radius : 0.012 * ref;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(box.min_x) << " "
       << fmt(box.min_y) << " " << fmt(box.width) << " " << fmt(box.height) << "\">\n";
    // flip y so the y axis points up
    os << "<g transform=\"translate(0," << fmt(2 * box.min_y + box.height)
       << ") scale(1,-1)\">\n";
    for (size_t ci = 0; ci < config.chains.size(); ++ci) {
        const Chain& c = config.chains[ci];
        const char* color = kPalette[ci % (sizeof kPalette / sizeof *kPalette)];
        os << (c.closed ? "<polygon" : "<polyline") << " fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"" << fmt(sw) << "\" stroke-linejoin=\"round\" points=\"";
        for (size_t k = 0; k < c.vertices.size(); ++k) {
            if (k) os << " ";
            os << fmt(c.vertices[k].x) << "," << fmt(c.vertices[k].y);
        }
        os << "\"/>\n";
        for (const auto& v : c.vertices)
            os << "<circle cx=\"" << fmt(v.x) << "\" cy=\"" << fmt(v.y) << "\" r=\"" << fmt(vr)
               << "\" fill=\"" << color << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

void write_trace(std::ostream& os, const MotionTrace& trace, const FlowParams& fp,
                 double eta, const std::string& method, int sections) {
    json header{{"type", "header"},
                {"method", method},
                {"params",
                 {{"dt_init", fp.dt_init},
                  {"dt_min", fp.dt_min},
                  {"max_steps", fp.max_steps},
                  {"straight_tol", fp.straight_tol},
                  {"convex_tol", fp.convex_tol},
                  {"bar_tol", fp.bar_tol},
                  {"expand_tol", fp.expand_tol},
                  {"snapshot_every", fp.snapshot_every},
                  {"eta", eta}}}};
    os << header.dump() << "\n";
    for (const auto& f : trace.frames) {
        json rec{{"type", "frame"},
                 {"t", f.t},
                 {"chains", linkage_to_json(f.config)["chains"]},
                 {"diag",
                  {{"min_strut_slack", f.diag.min_strut_slack},
                   {"max_bar_drift", f.diag.max_bar_drift},
                   {"dt", f.diag.dt}}}};
        os << rec.dump() << "\n";
    }
    json trailer{{"type", "trailer"},
                 {"outcome", outcome_name(trace.outcome)},
                 {"steps", trace.total_steps},
                 {"frames", trace.frames.size()}};
    if (sections >= 0) trailer["sections"] = sections;
    if (trace.failure_step >= 0) trailer["failure_step"] = trace.failure_step;
    os << trailer.dump() << "\n";
}

TraceFileInfo read_trace(std::istream& is) {
    TraceFileInfo info;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw SyntaxError(std::string("trace parse: ") + e.what());
        }
        std::string type = rec.value("type", "frame");
        if (type == "header") {
            info.has_header = true;
            info.method = rec.value("method", "");
        } else if (type == "trailer") {
            info.has_trailer = true;
            std::string oc = rec.value("outcome", "");
            if (oc == "Unfolded") info.trace.outcome = Outcome::Unfolded;
            else if (oc == "MaxStepsReached") info.trace.outcome = Outcome::MaxStepsReached;
            else info.trace.outcome = Outcome::NumericalFailure;
            info.trace.total_steps = rec.value("steps", 0);
            info.sections = rec.value("sections", -1);
        } else {
            TraceFrame f;
            f.t = rec.at("t").get<double>();
            json chains{{"chains", rec.at("chains")}};
            f.config = parse_linkage(chains.dump(), ParseOptions{false});
            if (rec.contains("diag")) {
                f.diag.min_strut_slack = rec["diag"].value("min_strut_slack", 0.0);
                f.diag.max_bar_drift = rec["diag"].value("max_bar_drift", 0.0);
                f.diag.dt = rec["diag"].value("dt", 0.0);
            }
            if (!info.trace.frames.empty() && f.t <= info.trace.frames.back().t)
                throw StructuralError("trace frames out of time order");
            info.trace.frames.push_back(std::move(f));
        }
    }
    return info;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Linkage load_linkage(const std::string& path, bool check_simplicity) {
    return parse_linkage(read_file(path), ParseOptions{check_simplicity});
}

int run_unfold_cmd(const std::string& input, const std::string& method, double eta,
                   double dt, int max_steps, int snapshot_every, double barrier_weight,
                   const std::string& out_path, const std::string& svg_dir) {
    Linkage l = load_linkage(input, true);
    FlowParams fp;
    if (dt > 0) fp.dt_init = dt;
    if (max_steps > 0) fp.max_steps = max_steps;
    if (snapshot_every > 0) fp.snapshot_every = snapshot_every;

    ExpansionParams ep;
    ep.eta = eta > 0 ? eta : default_eta(l);
    ep.barrier_weight = barrier_weight;

    MotionTrace trace;
    int sections = -1;
    if (method == "cdr") {
        trace = run_unfold(l, fp, ep);
    } else if (method == "streinu") {
        StreinuParams sp;
        sp.flow = fp;
        StreinuTrace st = run_streinu_unfold(l, sp);
        trace = std::move(st.trace);
        sections = st.sections;
    } else {
        throw StructuralError("unknown method '" + method + "' (use cdr or streinu)");
    }

    std::ostringstream trace_text;
    write_trace(trace_text, trace, fp, ep.eta, method, sections);
    if (out_path.empty()) {
        std::cout << trace_text.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw StructuralError("cannot write " + out_path);
        out << trace_text.str();
        json summary{{"outcome", outcome_name(trace.outcome)},
                     {"steps", trace.total_steps},
                     {"frames", trace.frames.size()},
                     {"t_final", trace.frames.back().t},
                     {"trace", out_path}};
        if (sections >= 0) summary["sections"] = sections;
        std::cout << summary.dump() << "\n";
    }

    if (!svg_dir.empty()) {
        ViewBox box = viewbox_for_trace(trace);
        for (size_t k = 0; k < trace.frames.size(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "/frame_%05zu.svg", k);
            std::ofstream svg(svg_dir + name);
            if (!svg) throw StructuralError("cannot write into " + svg_dir);
            svg << render_svg(trace.frames[k].config, SvgStyle{}, box);
        }
        log_info("wrote " + std::to_string(trace.frames.size()) + " SVG frames");
    }
    return trace.outcome == Outcome::Unfolded ? 0 : 2;
}

int run_analyze_cmd(const std::string& input) {
    Linkage l = load_linkage(input, true);
    Framework fw = build_framework(l);
    fw = classify_taut_struts(l, fw, 5e-4);
    int taut = 0;
    for (const auto& e : fw.edges)
        if (e.kind == EdgeKind::TautStrut) ++taut;

    json out{{"n", fw.n},
             {"bars", fw.bar_count()},
             {"struts", fw.strut_count()},
             {"taut_struts", taut}};
    auto pos = all_vertices(l);
    auto stress = find_equilibrium_stress(pos, fw);
    if (!stress) {
        out["stress"] = "none";
        out["verdict"] = "no nonzero equilibrium stress: an expansive motion exists";
    } else {
        double min_strut = 0.0;
        for (size_t e = 0; e < fw.edges.size(); ++e)
            if (fw.edges[e].kind != EdgeKind::Bar)
                min_strut = std::min(min_strut, stress->omega(e));
        out["stress"] = "witness";
        out["verdict"] = "nonzero equilibrium stress found: configuration is stuck";
        out["equilibrium_residual"] = equilibrium_residual(pos, fw, stress->omega);
        out["min_strut_stress"] = min_strut;
        json om = json::array();
        for (size_t e = 0; e < fw.edges.size(); ++e)
            om.push_back({{"i", fw.edges[e].i}, {"j", fw.edges[e].j}, {"omega", stress->omega(e)}});
        out["omega"] = om;
    }
    std::cout << out.dump() << "\n";
    return 0;
}

int run_certify_cmd(const std::string& input, const std::string& stress_path) {
    Linkage l = load_linkage(input, true);
    Framework fw = build_framework(l);
    auto pos = all_vertices(l);

    StressAssignment stress;
    stress.omega = Eigen::VectorXd::Zero(fw.edges.size());
    std::string source = "zero";
    if (!stress_path.empty()) {
        json doc;
        try {
            doc = json::parse(read_file(stress_path));
        } catch (const json::exception& e) {
            throw SyntaxError(std::string("stress parse: ") + e.what());
        }
        if (!doc.contains("omega") || !doc["omega"].is_array() ||
            doc["omega"].size() != fw.edges.size())
            throw StructuralError("stress file needs \"omega\" with one value per edge (" +
                                  std::to_string(fw.edges.size()) + ")");
        for (size_t e = 0; e < fw.edges.size(); ++e)
            stress.omega(e) = doc["omega"][e].get<double>();
        source = "file";
    } else {
        auto found = find_equilibrium_stress(pos, fw);
        if (found) {
            stress = *found;
            source = "equilibrium_search";
        }
    }
    stress.normalization = stress.omega.cwiseAbs().sum();

    PlanarFramework pf = planarize(pos, fw, stress);
    Terrain t = maxwell_cremona_lift(pf);
    LiftReport rep = verify_lift(pf, t, 1e-9);

    json out{{"stress_source", source},
             {"crossings", pf.vertices.size() - pos.size()},
             {"closure_residual", rep.max_closure_residual},
             {"is_flat", rep.is_flat},
             {"mountain_valley_consistent", rep.mountain_valley_consistent}};
    std::cout << out.dump() << "\n";
    return 0;
}

int run_pt_cmd(const std::string& input, double jitter) {
    Linkage l = load_linkage(input, true);
    auto pos = all_vertices(l);
    if (jitter > 0) {
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> u(-jitter, jitter);
        for (auto& p : pos) {
            p.x += u(rng);
            p.y += u(rng);
        }
    }
    std::vector<std::pair<int, int>> bars = chain_edges(l);
    for (auto& [i, j] : bars)
        if (i > j) std::swap(i, j);
    Pseudotriangulation pt = build_pointed_pseudotriangulation(pos, bars);
    PtReport rep = verify_pseudotriangulation(pos, pt);

    json edges = json::array();
    for (size_t e = 0; e < pt.edges.size(); ++e)
        edges.push_back({{"i", pt.edges[e].first},
                         {"j", pt.edges[e].second},
                         {"bar", static_cast<bool>(pt.edge_is_bar[e])}});
    json out{{"n", pt.n},
             {"edges", edges},
             {"edge_count", pt.edges.size()},
             {"faces", pt.faces.size()},
             {"edge_count_ok", rep.edge_count_ok},
             {"pointed_ok", rep.pointed_ok},
             {"faces_ok", rep.faces_ok}};
    std::cout << out.dump() << "\n";
    return rep.all_ok() ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"planar linkage unfolding: expansive motions, stress analysis, "
                 "Maxwell-Cremona liftings and pseudotriangulation mechanisms"};
    app.require_subcommand(1);

    std::string input, method = "cdr", out_path, svg_dir, stress_path;
    double eta = -1, dt = -1, barrier_weight = 0.0, jitter = 0.0;
    int max_steps = -1, snapshot_every = -1;

    auto* unfold = app.add_subcommand("unfold", "unfold a linkage and write a trace");
    unfold->add_option("--input", input, "linkage file")->required();
    unfold->add_option("--method", method, "cdr | streinu");
    unfold->add_option("--eta", eta, "strut demand scale (default 0.1 * shortest bar)");
    unfold->add_option("--dt", dt, "initial step size");
    unfold->add_option("--max-steps", max_steps, "step budget");
    unfold->add_option("--snapshot-every", snapshot_every, "frame subsampling");
    unfold->add_option("--barrier-weight", barrier_weight, "log-barrier smoothing weight");
    unfold->add_option("--out", out_path, "trace file (default: stdout)");
    unfold->add_option("--svg-dir", svg_dir, "write one SVG per stored frame");

    auto* analyze = app.add_subcommand("analyze", "framework stats and stress verdict");
    analyze->add_option("--input", input, "linkage file")->required();

    auto* certify = app.add_subcommand("certify", "planarize, lift, verify");
    certify->add_option("--input", input, "linkage file")->required();
    certify->add_option("--stress", stress_path, "stress file (default: search)");

    auto* pt = app.add_subcommand("pt", "build and verify a pointed pseudotriangulation");
    pt->add_option("--input", input, "linkage file")->required();
    pt->add_option("--jitter", jitter, "deterministic jitter amplitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (unfold->parsed())
            return run_unfold_cmd(input, method, eta, dt, max_steps, snapshot_every,
                                  barrier_weight, out_path, svg_dir);
        if (analyze->parsed()) return run_analyze_cmd(input);
        if (certify->parsed()) return run_certify_cmd(input, stress_path);
        if (pt->parsed()) return run_pt_cmd(input, jitter);
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SimplicityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const FrameworkError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace unlock
