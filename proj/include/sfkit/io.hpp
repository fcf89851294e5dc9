#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfkit/envelope.hpp"
#include "sfkit/geometry.hpp"
#include "sfkit/linalg.hpp"
#include "sfkit/relaxation.hpp"
#include "sfkit/sampling_bounds.hpp"
#include "sfkit/shapley_folkman.hpp"

namespace sfkit {

using json = nlohmann::json;

/// Shortest round-trip decimal representation ('.' decimal, no locale).
inline std::string fmt_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("fmt_double: conversion failed");
    return std::string(buf, ptr);
}

inline json to_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

inline json to_json(const Mat& m) {
    json a = json::array();
    for (std::size_t r = 0; r < m.rows; ++r) a.push_back(to_json(m.row(r)));
    return a;
}

inline Vec vec_from_json(const json& a) {
    if (!a.is_array()) throw std::invalid_argument("expected array of numbers");
    Vec v;
    v.reserve(a.size());
    for (const auto& x : a) v.push_back(x.get<double>());
    return v;
}

inline Mat mat_from_json(const json& a) {
    if (!a.is_array()) throw std::invalid_argument("expected array of rows");
    Mat m;
    m.rows = a.size();
    m.cols = a.empty() ? 0 : a[0].size();
    m.data.reserve(m.rows * m.cols);
    for (const auto& row : a) {
        if (row.size() != m.cols) throw std::invalid_argument("ragged matrix");
        for (const auto& x : row) m.data.push_back(x.get<double>());
    }
    return m;
}

// --- PointSet ---------------------------------------------------------------

inline json to_json(const PointSet& ps) {
    json j;
    j["label"] = ps.label;
    j["dim"] = ps.dim;
    json pts = json::array();
    for (const Vec& p : ps.points) pts.push_back(to_json(p));
    j["points"] = pts;
    return j;
}

inline PointSet pointset_from_json(const json& j) {
    PointSet ps;
    ps.label = j.value("label", std::string{});
    ps.dim = j.at("dim").get<std::size_t>();
    for (const auto& p : j.at("points")) ps.points.push_back(vec_from_json(p));
    ps.validate();
    return ps;
}

// --- SampledFunction ---------------------------------------------------------

inline json to_json(const SampledFunction& f) {
    json j;
    j["dim"] = f.dim;
    json g = json::array();
    for (const Vec& p : f.grid) g.push_back(to_json(p));
    j["grid"] = g;
    j["values"] = to_json(f.values);
    return j;
}

inline SampledFunction sampled_function_from_json(const json& j) {
    SampledFunction f;
    f.dim = j.at("dim").get<std::size_t>();
    for (const auto& p : j.at("grid")) {
        if (p.is_number())  // 1-D convenience: bare numbers
            f.grid.push_back({p.get<double>()});
        else
            f.grid.push_back(vec_from_json(p));
    }
    f.values = vec_from_json(j.at("values"));
    f.canonicalize();
    return f;
}

// --- SeparableProblem ----------------------------------------------------------

inline json to_json(const SeparableProblem& p) {
    json j;
    json blocks = json::array();
    for (const auto& f : p.blocks) blocks.push_back(to_json(f));
    j["blocks"] = blocks;
    j["A"] = to_json(p.A);
    j["b"] = to_json(p.b);
    if (p.num_aux() > 0) j["C_aux"] = to_json(p.C_aux);
    return j;
}

inline SeparableProblem problem_from_json(const json& j) {
    SeparableProblem p;
    for (const auto& f : j.at("blocks")) p.blocks.push_back(sampled_function_from_json(f));
    p.A = mat_from_json(j.at("A"));
    p.b = vec_from_json(j.at("b"));
    if (j.contains("C_aux")) p.C_aux = mat_from_json(j.at("C_aux"));
    p.validate();
    return p;
}

// --- BlockFamily ---------------------------------------------------------------

inline json to_json(const BlockFamily& fam) {
    json j;
    j["dim"] = fam.dim;
    json blocks = json::array();
    for (std::size_t i = 0; i < fam.size(); ++i) {
        json b;
        b["label"] = fam.blocks[i].label;
        json pts = json::array();
        for (const Vec& p : fam.blocks[i].points) pts.push_back(to_json(p));
        b["points"] = pts;
        b["weights"] = to_json(fam.weights[i]);
        blocks.push_back(b);
    }
    j["blocks"] = blocks;
    return j;
}

inline BlockFamily family_from_json(const json& j) {
    BlockFamily fam;
    fam.dim = j.at("dim").get<std::size_t>();
    for (const auto& b : j.at("blocks")) {
        PointSet ps;
        ps.dim = fam.dim;
        ps.label = b.value("label", std::string{});
        for (const auto& p : b.at("points")) ps.points.push_back(vec_from_json(p));
        fam.blocks.push_back(std::move(ps));
        fam.weights.push_back(vec_from_json(b.at("weights")));
    }
    fam.validate();
    return fam;
}

// --- SampledLpInstance -----------------------------------------------------------

inline json to_json(const SampledLpInstance& lp) {
    json j;
    j["objective"]["C"] = to_json(lp.obj_C);
    j["objective"]["d"] = to_json(lp.obj_d);
    j["A"] = to_json(lp.A);
    j["b"] = to_json(lp.b);
    return j;
}

inline SampledLpInstance lp_instance_from_json(const json& j) {
    SampledLpInstance lp;
    lp.obj_C = mat_from_json(j.at("objective").at("C"));
    lp.obj_d = vec_from_json(j.at("objective").at("d"));
    lp.A = mat_from_json(j.at("A"));
    lp.b = vec_from_json(j.at("b"));
    lp.validate();
    return lp;
}

// --- files ----------------------------------------------------------------------

/// Write-then-rename so readers never observe partial files.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

/// CSV with a header row, '.' decimal, '\n' newline; bit-exact for diffing.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += header[i];
        }
        buf_ += '\n';
        width_ = header.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw std::invalid_argument("CsvWriter: column count mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) buf_ += ',';
            buf_ += cells[i];
        }
        buf_ += '\n';
    }

    void row_numeric(const Vec& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double v : cells) s.push_back(fmt_double(v));
        row(s);
    }

    const std::string& str() const { return buf_; }

  private:
    std::string buf_;
    std::size_t width_ = 0;
};

/// Hand-rolled SVG: polylines and circles only. The generator comment is
/// omitted in deterministic mode.
class SvgCanvas {
  public:
    SvgCanvas(double min_x, double min_y, double max_x, double max_y, int px = 480)
        : min_x_(min_x), min_y_(min_y), max_x_(max_x), max_y_(max_y), px_(px) {}

    void circle(const Vec& p, double r_px, const std::string& fill) {
        body_ += "<circle cx=\"" + fmt_double(sx(p[0])) + "\" cy=\"" + fmt_double(sy(p[1])) +
                 "\" r=\"" + fmt_double(r_px) + "\" fill=\"" + fill + "\"/>\n";
    }

    void polyline(const std::vector<Vec>& pts, const std::string& stroke, bool close = false) {
        body_ += "<polyline points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) body_ += ' ';
            body_ += fmt_double(sx(pts[i][0])) + "," + fmt_double(sy(pts[i][1]));
        }
        if (close && !pts.empty())
            body_ += " " + fmt_double(sx(pts[0][0])) + "," + fmt_double(sy(pts[0][1]));
        body_ += "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
    }

    std::string str(bool deterministic, const std::string& stamp = {}) const {
        std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        if (!deterministic && !stamp.empty()) out += "<!-- generated " + stamp + " -->\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(px_) +
               "\" height=\"" + std::to_string(px_) + "\" viewBox=\"0 0 " + std::to_string(px_) +
               " " + std::to_string(px_) + "\">\n";
        out += body_;
        out += "</svg>\n";
        return out;
    }

  private:
    double sx(double x) const { return (x - min_x_) / (max_x_ - min_x_) * px_; }
    double sy(double y) const { return (max_y_ - y) / (max_y_ - min_y_) * px_; }
    double min_x_, min_y_, max_x_, max_y_;
    int px_;
    std::string body_;
};

}  // namespace sfkit
