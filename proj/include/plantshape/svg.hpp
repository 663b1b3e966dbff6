#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace plantshape {

// Minimal SVG writer for figure-style trajectory overlays. Workspace
// coordinates (cm) are mapped so +y points up on the page.
class SvgCanvas {
public:
    SvgCanvas(double x_min, double x_max, double y_min, double y_max, double px_per_cm = 12.0)
        : x_min_(x_min), y_max_(y_max), scale_(px_per_cm),
          width_((x_max - x_min) * px_per_cm), height_((y_max - y_min) * px_per_cm) {}

    void rect(const Obstacle& o, const std::string& fill) {
        body_ += "<rect x=\"" + num(sx(o.left())) + "\" y=\"" + num(sy(o.top())) + "\" width=\"" +
                 num(o.width * scale_) + "\" height=\"" + num(o.height * scale_) + "\" fill=\"" +
                 fill + "\"/>\n";
    }

    void circle(const Point2& c, double radius_cm, const std::string& stroke,
                const std::string& fill = "none") {
        body_ += "<circle cx=\"" + num(sx(c.x)) + "\" cy=\"" + num(sy(c.y)) + "\" r=\"" +
                 num(radius_cm * scale_) + "\" stroke=\"" + stroke + "\" fill=\"" + fill + "\"/>\n";
    }

    void polyline(const StemPolyline& s, const std::string& stroke, double width = 1.0) {
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
                 "\" points=\"";
        for (const auto& p : s.points) body_ += num(sx(p.x)) + "," + num(sy(p.y)) + " ";
        body_ += "\"/>\n";
    }

    void write(std::ostream& os) const {
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\""
           << num(height_) << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_ << "</svg>\n";
    }

private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }
    double sx(double x) const { return (x - x_min_) * scale_; }
    double sy(double y) const { return (y_max_ - y) * scale_; }

    double x_min_, y_max_, scale_, width_, height_;
    std::string body_;
};

} // namespace plantshape
