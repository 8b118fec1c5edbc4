#ifndef UNLOCK_IO_HPP
#define UNLOCK_IO_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "unlock/flow.hpp"
#include "unlock/geometry.hpp"

namespace unlock {

struct SyntaxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SimplicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseOptions {
    bool check_simplicity = true;
};

// { "chains": [ { "closed": bool, "vertices": [[x, y], ...] }, ... ] }
Linkage parse_linkage(const std::string& text, const ParseOptions& opts = {});
std::string serialize_linkage(const Linkage& l);

struct SvgStyle {
    double stroke_width = 0.0;   // 0: derived from the viewbox
    double vertex_radius = 0.0;  // 0: derived from the viewbox
};

struct ViewBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double width = 1.0;
    double height = 1.0;
};

// Bounding box of the final frame padded by 10%; the motion is expansive,
// so this contains every earlier frame.
ViewBox viewbox_for_trace(const MotionTrace& trace);
ViewBox viewbox_for(const Linkage& l);

std::string render_svg(const Linkage& config, const SvgStyle& style, const ViewBox& box);

struct TraceFileInfo {
    MotionTrace trace;
    bool has_header = false;
    bool has_trailer = false;
    std::string method;
    int sections = -1;
};

// Line-delimited records: a header with the run parameters, one record per
// stored frame, and a trailer with the outcome once the run completed.
void write_trace(std::ostream& os, const MotionTrace& trace, const FlowParams& fp,
                 double eta, const std::string& method, int sections = -1);
TraceFileInfo read_trace(std::istream& is);

// Subcommands: unfold, analyze, certify, pt. Exit code 0 on success, 1 on
// input errors, 2 on numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace unlock

#endif
