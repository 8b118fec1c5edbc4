#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "test_support.hpp"
#include "unlock/io.hpp"

using namespace unlock;
namespace fs = std::filesystem;

namespace {

std::string capture_cli(const std::vector<std::string>& args, int* exit_code) {
    std::vector<const char*> argv{"unlock"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    int code = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    if (exit_code) *exit_code = code;
    return captured.str();
}

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << content;
    return p;
}

}  // namespace

TEST_CASE("parse a single open chain") {
    Linkage l = parse_linkage(R"({"chains":[{"closed":false,"vertices":[[0,0],[1,0]]}]})");
    REQUIRE(l.chains.size() == 1);
    CHECK(!l.chains[0].closed);
    CHECK(l.chains[0].size() == 2);
}

TEST_CASE("parse errors carry their kind") {
    CHECK_THROWS_AS(parse_linkage("{nope"), SyntaxError);
    CHECK_THROWS_AS(parse_linkage(R"({"chains":[]})"), StructuralError);
    CHECK_THROWS_AS(parse_linkage(R"({"chains":[{"closed":false,"vertices":[[0,0]]}]})"),
                    StructuralError);
    CHECK_THROWS_AS(
        parse_linkage(
            R"({"chains":[{"closed":false,"vertices":[[0,0],[2,0],[1,1],[1,-1]]}]})"),
        SimplicityError);
}

TEST_CASE("the simplicity check can be skipped for analysis inputs") {
    ParseOptions opts;
    opts.check_simplicity = false;
    Linkage l = parse_linkage(
        R"({"chains":[{"closed":false,"vertices":[[0,0],[2,0],[1,1],[1,-1]]}]})", opts);
    CHECK(l.vertex_count() == 4);
}

TEST_CASE("serialize and reparse round-trips exactly") {
    Linkage l{{Chain{{{0.1, -0.3333333333333333}, {1e-17, 2.5e100}}, false},
               Chain{{{1, 0}, {0.7777777777777777, 3}, {2, 0.1234567890123456789}}, true}}};
    Linkage back = parse_linkage(serialize_linkage(l), ParseOptions{false});
    REQUIRE(back.chains.size() == l.chains.size());
    for (size_t c = 0; c < l.chains.size(); ++c) {
        CHECK(back.chains[c].closed == l.chains[c].closed);
        REQUIRE(back.chains[c].size() == l.chains[c].size());
        for (int k = 0; k < l.chains[c].size(); ++k) {
            CHECK(back.chains[c].vertices[k].x == l.chains[c].vertices[k].x);
            CHECK(back.chains[c].vertices[k].y == l.chains[c].vertices[k].y);
        }
    }
}

TEST_CASE("svg rendering") {
    Linkage seg{{Chain{{{0, 0}, {3, 4}}, false}}};
    std::string svg = render_svg(seg, SvgStyle{}, viewbox_for(seg));
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("<polygon") == std::string::npos);

    Linkage tri{{Chain{{{0, 0}, {4, 0}, {2, 3}}, true}}};
    std::string svg2 = render_svg(tri, SvgStyle{}, viewbox_for(tri));
    CHECK(svg2.find("<polygon") != std::string::npos);

    // identical input, identical text
    CHECK(render_svg(tri, SvgStyle{}, viewbox_for(tri)) == svg2);
}

TEST_CASE("trace viewbox contains every frame of an expansive run") {
    Linkage l{{Chain{{{0, 0}, {1, 0}, {1, 1}}, false}}};
    FlowParams fp;
    ExpansionParams ep;
    ep.eta = default_eta(l);
    MotionTrace trace = run_unfold(l, fp, ep);
    REQUIRE(trace.outcome == Outcome::Unfolded);
    ViewBox box = viewbox_for_trace(trace);
    for (const auto& f : trace.frames)
        for (const auto& p : all_vertices(f.config)) {
            CHECK(p.x >= box.min_x);
            CHECK(p.x <= box.min_x + box.width);
            CHECK(p.y >= box.min_y);
            CHECK(p.y <= box.min_y + box.height);
        }
}

TEST_CASE("trace files round-trip and re-validate") {
    Linkage l{{Chain{{{0, 0}, {1, 0}, {1, 1}}, false}}};
    FlowParams fp;
    ExpansionParams ep;
    ep.eta = default_eta(l);
    MotionTrace trace = run_unfold(l, fp, ep);

    std::stringstream ss;
    write_trace(ss, trace, fp, ep.eta, "cdr");
    TraceFileInfo info = read_trace(ss);
    CHECK(info.has_header);
    CHECK(info.has_trailer);
    CHECK(info.trace.outcome == Outcome::Unfolded);
    REQUIRE(info.trace.frames.size() == trace.frames.size());

    std::vector<double> targets;
    for (int k = 0; k < l.chains[0].segment_count(); ++k)
        targets.push_back(l.chains[0].segment(k).length());
    for (const auto& f : info.trace.frames) {
        CHECK(is_simple(f.config));
        for (int k = 0; k < f.config.chains[0].segment_count(); ++k) {
            double len = f.config.chains[0].segment(k).length();
            CHECK(std::abs(len - targets[k]) / targets[k] <= fp.bar_tol);
        }
    }
}

TEST_CASE("cli unfold produces a deterministic unfolded trace") {
    auto input = temp_file("unlock_test_l.json",
                           R"({"chains":[{"closed":false,"vertices":[[0,0],[1,0],[1,1]]}]})");
    int code1 = -1, code2 = -1;
    auto out1 = capture_cli({"unfold", "--input", input.string()}, &code1);
    auto out2 = capture_cli({"unfold", "--input", input.string()}, &code2);
    CHECK(code1 == 0);
    CHECK(out1 == out2);
    CHECK(out1.find("\"Unfolded\"") != std::string::npos);

    std::istringstream ss(out1);
    TraceFileInfo info = read_trace(ss);
    CHECK(info.has_header);
    CHECK(info.has_trailer);
    CHECK(info.trace.outcome == Outcome::Unfolded);
}

TEST_CASE("cli analyze reports no stress for a bent chain") {
    auto input = temp_file("unlock_test_bent.json",
                           R"({"chains":[{"closed":false,"vertices":[[0,0],[1,0],[1.4,0.9]]}]})");
    int code = -1;
    auto out = capture_cli({"analyze", "--input", input.string()}, &code);
    CHECK(code == 0);
    CHECK(out.find("\"none\"") != std::string::npos);
}

TEST_CASE("cli rejects non-simple input with exit code 1") {
    auto input = temp_file(
        "unlock_test_cross.json",
        R"({"chains":[{"closed":false,"vertices":[[0,0],[2,0],[1,1],[1,-1]]}]})");
    int code = -1;
    capture_cli({"unfold", "--input", input.string()}, &code);
    CHECK(code == 1);
}

TEST_CASE("cli certify is flat on a chain and writes svg frames") {
    auto input = temp_file("unlock_test_cert.json",
                           R"({"chains":[{"closed":false,"vertices":[[0,0],[1,0],[1.3,0.8]]}]})");
    int code = -1;
    auto out = capture_cli({"certify", "--input", input.string()}, &code);
    CHECK(code == 0);
    CHECK(out.find("\"is_flat\":true") != std::string::npos);

    fs::path svg_dir = fs::temp_directory_path() / "unlock_test_svgs";
    fs::create_directories(svg_dir);
    int code2 = -1;
    capture_cli({"unfold", "--input", input.string(), "--svg-dir", svg_dir.string(), "--out",
                 (fs::temp_directory_path() / "unlock_test_trace.jsonl").string()},
                &code2);
    CHECK(code2 == 0);
    CHECK(fs::exists(svg_dir / "frame_00000.svg"));
}

TEST_CASE("cli pt builds a verified pseudotriangulation") {
    auto input = temp_file("unlock_test_pt.json",
                           R"({"chains":[{"closed":false,"vertices":[[0,0],[1,0],[1.3,0.8],[0.4,1.3]]}]})");
    int code = -1;
    auto out = capture_cli({"pt", "--input", input.string()}, &code);
    CHECK(code == 0);
    CHECK(out.find("\"edge_count_ok\":true") != std::string::npos);
    CHECK(out.find("\"pointed_ok\":true") != std::string::npos);
    CHECK(out.find("\"faces_ok\":true") != std::string::npos);
}
