#include "torqflow/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "torqflow/errors.hpp"
#include "torqflow/geometry.hpp"
#include "torqflow/io.hpp"
#include "torqflow/mesh.hpp"
#include "torqflow/orlicz.hpp"
#include "torqflow/torsion.hpp"

namespace torqflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// key,value tables (text-valued, unlike the numeric io.hpp tables)
// ---------------------------------------------------------------------------

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out.flush()) throw ValidationError("short write to " + path.string());
}

void write_kv_csv(const fs::path& path,
                  const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ostringstream out;
    out << "key,value\n";
    for (const auto& [k, v] : rows) out << csv_escape(k) << ',' << csv_escape(v) << '\n';
    write_text(path, out.str());
}

std::vector<std::string> split_quoted_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

std::vector<std::pair<std::string, std::string>> read_kv_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) ||
        split_quoted_line(line) != std::vector<std::string>{"key", "value"})
        throw ValidationError(path.string() + ": expected a key,value table");
    std::vector<std::pair<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_quoted_line(line);
        if (cells.size() != 2)
            throw ValidationError(path.string() + ": row width does not match header");
        rows.push_back({cells[0], cells[1]});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// JSON config ingestion
// ---------------------------------------------------------------------------

void reject_unknown(const json& obj, const char* ctx,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            throw ValidationError(std::string("config: unknown key '") + key + "' in " + ctx);
    }
}

const json& need(const json& obj, const char* key, const char* ctx) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ValidationError(std::string("config: missing required '") + key + "' in " + ctx);
    return *it;
}

double as_number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ValidationError("config: " + what + " must be a number");
    return v.get<double>();
}

int as_integer(const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw ValidationError("config: " + what + " must be an integer");
    return v.get<int>();
}

bool as_boolean(const json& v, const std::string& what) {
    if (!v.is_boolean()) throw ValidationError("config: " + what + " must be a boolean");
    return v.get<bool>();
}

std::string as_text(const json& v, const std::string& what) {
    if (!v.is_string()) throw ValidationError("config: " + what + " must be a string");
    return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& what) {
    if (!v.is_array()) throw ValidationError("config: " + what + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(e, what + " entry"));
    return out;
}

OrliczFunction parse_phi(const json& spec) {
    if (!spec.is_object()) throw ValidationError("config: phi must be an object");
    const std::string type = as_text(need(spec, "type", "phi"), "phi.type");
    if (type == "power") {
        reject_unknown(spec, "phi", {"type", "exponent"});
        return OrliczFunction::power(as_number(need(spec, "exponent", "phi"), "phi.exponent"));
    }
    if (type == "exponential") {
        reject_unknown(spec, "phi", {"type", "rate"});
        return OrliczFunction::exponential(as_number(need(spec, "rate", "phi"), "phi.rate"));
    }
    if (type == "tabulated") {
        reject_unknown(spec, "phi", {"type", "nodes", "values"});
        return OrliczFunction::tabulated(as_numbers(need(spec, "nodes", "phi"), "phi.nodes"),
                                         as_numbers(need(spec, "values", "phi"), "phi.values"));
    }
    throw ValidationError("config: phi.type must be power, exponential, or tabulated");
}

DensitySpec parse_density(const json& spec) {
    if (!spec.is_object()) throw ValidationError("config: f must be an object");
    const std::string type = as_text(need(spec, "type", "f"), "f.type");
    if (type == "constant") {
        reject_unknown(spec, "f", {"type", "value"});
        return DensitySpec::constant(as_number(need(spec, "value", "f"), "f.value"));
    }
    if (type == "fourier") {
        reject_unknown(spec, "f", {"type", "a0", "cos", "sin"});
        std::vector<double> c, s;
        if (spec.contains("cos")) c = as_numbers(spec["cos"], "f.cos");
        if (spec.contains("sin")) s = as_numbers(spec["sin"], "f.sin");
        return DensitySpec::fourier(as_number(need(spec, "a0", "f"), "f.a0"), std::move(c),
                                    std::move(s));
    }
    throw ValidationError("config: f.type must be constant or fourier");
}

SupportProfile parse_body(const json& spec, int grid, const fs::path& base_dir) {
    if (!spec.is_object()) throw ValidationError("config: body must be an object");
    const std::string type = as_text(need(spec, "type", "body"), "body.type");
    if (type == "disk") {
        reject_unknown(spec, "body", {"type", "radius"});
        return disk_profile(as_number(need(spec, "radius", "body"), "body.radius"), grid);
    }
    if (type == "ellipse") {
        reject_unknown(spec, "body", {"type", "a", "b"});
        return ellipse_profile(as_number(need(spec, "a", "body"), "body.a"),
                               as_number(need(spec, "b", "body"), "body.b"), grid);
    }
    if (type == "fourier") {
        reject_unknown(spec, "body", {"type", "a0", "cos", "sin"});
        std::vector<double> c, s;
        if (spec.contains("cos")) c = as_numbers(spec["cos"], "body.cos");
        if (spec.contains("sin")) s = as_numbers(spec["sin"], "body.sin");
        return fourier_profile(as_number(need(spec, "a0", "body"), "body.a0"), c, s, grid);
    }
    if (type == "profile") {
        reject_unknown(spec, "body", {"type", "path"});
        const fs::path rel = as_text(need(spec, "path", "body"), "body.path");
        return read_profile_csv((rel.is_absolute() ? rel : base_dir / rel).string());
    }
    throw ValidationError("config: body.type must be disk, ellipse, fourier, or profile");
}

bool label_safe(const std::string& s) {
    if (s.empty() || s.size() > 64) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '.' || c == '_' || c == '-';
    });
}

// ---------------------------------------------------------------------------
// SVG emission (native polyline/axis primitives; no plotting dependency)
// ---------------------------------------------------------------------------

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

std::string px(double v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::vector<Series>& series) {
    constexpr double W = 640, H = 420, L = 60, R = 620, T = 40, B = 380;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const Series& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmax - xmin < 1e-300) xmax = xmin + 1.0;
    const double pad = (ymax - ymin < 1e-300) ? std::max(1.0, std::abs(ymin)) * 0.1
                                              : (ymax - ymin) * 0.05;
    ymin -= pad;
    ymax += pad;
    auto mapx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (R - L); };
    auto mapy = [&](double y) { return B - (y - ymin) / (ymax - ymin) * (B - T); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << title << "</text>\n"
        << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << R - L << "\" height=\""
        << B - T << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << px(L) << "\" y=\"398\" font-family=\"sans-serif\" font-size=\"11\">"
        << tick(xmin) << "</text>\n"
        << "<text x=\"" << px(R) << "\" y=\"398\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"11\">"
        << tick(xmax) << "</text>\n"
        << "<text x=\"" << (L + R) / 2 << "\" y=\"412\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"12\">"
        << xlabel << "</text>\n"
        << "<text x=\"" << px(L - 4) << "\" y=\"" << px(B) << "\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"11\">"
        << tick(ymin) << "</text>\n"
        << "<text x=\"" << px(L - 4) << "\" y=\"" << px(T + 4) << "\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"11\">"
        << tick(ymax) << "</text>\n";
    for (size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = kPalette[k % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << ' ';
            out << px(mapx(s.x[i])) << ',' << px(mapy(s.y[i]));
        }
        out << "\"/>\n";
        out << "<text x=\"" << px(R - 8) << "\" y=\"" << px(T + 16 + 15 * k)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
            << color << "\">" << s.name << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

struct Outline {
    std::string name;
    std::vector<Vec2> points;
    bool emphasize = false;
};

std::string svg_body_chart(const std::string& title, const std::vector<Outline>& outlines) {
    constexpr double W = 480, H = 480;
    constexpr double cx = W / 2, cy = H / 2 + 10, S = 190;
    double extent = 1e-9;
    for (const Outline& o : outlines)
        for (const Vec2& p : o.points)
            extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    extent *= 1.05;
    auto mapx = [&](double x) { return cx + x / extent * S; };
    auto mapy = [&](double y) { return cy - y / extent * S; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << title << "</text>\n"
        << "<line x1=\"" << px(mapx(-extent)) << "\" y1=\"" << px(mapy(0)) << "\" x2=\""
        << px(mapx(extent)) << "\" y2=\"" << px(mapy(0)) << "\" stroke=\"#dddddd\"/>\n"
        << "<line x1=\"" << px(mapx(0)) << "\" y1=\"" << px(mapy(-extent)) << "\" x2=\""
        << px(mapx(0)) << "\" y2=\"" << px(mapy(extent)) << "\" stroke=\"#dddddd\"/>\n";
    for (size_t k = 0; k < outlines.size(); ++k) {
        const Outline& o = outlines[k];
        const char* color = o.emphasize ? "#d62728" : (k == 0 ? "#9aa5b1" : "#1f77b4");
        out << "<polygon fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
            << (o.emphasize ? "2" : "1") << "\" points=\"";
        for (size_t i = 0; i < o.points.size(); ++i) {
            if (i) out << ' ';
            out << px(mapx(o.points[i].x)) << ',' << px(mapy(o.points[i].y));
        }
        out << "\"/>\n";
        out << "<text x=\"12\" y=\"" << px(44 + 15 * k)
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
            << o.name << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// run artifacts; cmd_flow and cmd_report route through the same writers so a
// regenerated report is byte-identical to the original emission.
// ---------------------------------------------------------------------------

const std::vector<std::string> kMonitorHeader = {"step",  "t",     "dt",       "lambda",
                                                 "tq",    "gamma", "residual", "min_h",
                                                 "max_h", "min_b"};

struct RunArtifacts {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::vector<double>> rows; // monitor columns per accepted state
    SupportProfile initial{std::vector<double>(16, 1.0)};
    SupportProfile final_profile{std::vector<double>(16, 1.0)};
    std::vector<std::pair<int, SupportProfile>> snapshots; // step > 0 only
};

std::string meta_value(const RunArtifacts& a, const std::string& key) {
    for (const auto& [k, v] : a.meta)
        if (k == key) return v;
    throw ValidationError("run_meta.csv: missing key '" + key + "'");
}

enum MonitorColumn { kStep = 0, kT, kDt, kLambda, kTq, kGamma, kResidual };

std::vector<std::pair<std::string, std::string>> summary_rows(const RunArtifacts& a) {
    const std::vector<double>& first = a.rows.front();
    const std::vector<double>& last = a.rows.back();
    return {
        {"label", meta_value(a, "label")},
        {"termination", meta_value(a, "termination")},
        {"steps", meta_value(a, "steps")},
        {"initial_tq", format_g17(first[kTq])},
        {"final_tq", format_g17(last[kTq])},
        {"tq_drift", format_g17(std::abs(last[kTq] - first[kTq]) / first[kTq])},
        {"initial_gamma", format_g17(first[kGamma])},
        {"final_gamma", format_g17(last[kGamma])},
        {"final_residual", format_g17(last[kResidual])},
    };
}

std::vector<fs::path> write_plots(const fs::path& dir, const RunArtifacts& a) {
    const std::string label = meta_value(a, "label");
    std::vector<double> t, gamma_s, tq_s, logres;
    for (const std::vector<double>& r : a.rows) {
        t.push_back(r[kT]);
        gamma_s.push_back(r[kGamma]);
        tq_s.push_back(r[kTq]);
        logres.push_back(std::log10(std::max(r[kResidual], 1e-300)));
    }
    write_text(dir / "monitors.svg",
               svg_line_chart(label + ": conservation and entropy", "t",
                              {{"Gamma", t, gamma_s}, {"T_q", t, tq_s}}));
    write_text(dir / "residual.svg",
               svg_line_chart(label + ": equation residual", "t",
                              {{"log10 residual", t, logres}}));

    std::vector<Outline> outlines;
    outlines.push_back({"initial", boundary_points(a.initial).points, false});
    for (const auto& [step, profile] : a.snapshots) {
        char name[32];
        std::snprintf(name, sizeof(name), "step %d", step);
        outlines.push_back({name, boundary_points(profile).points, false});
    }
    outlines.push_back({"final", boundary_points(a.final_profile).points, true});
    write_text(dir / "body.svg", svg_body_chart(label + ": body outlines", outlines));
    return {dir / "monitors.svg", dir / "residual.svg", dir / "body.svg"};
}

// ---------------------------------------------------------------------------
// exit-code guard
// ---------------------------------------------------------------------------

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConvexityError& e) {
        std::fprintf(stderr, "convexity lost: %s (min h %.3e, min b %.3e)\n", e.what(),
                     e.min_h(), e.min_b());
        return 4;
    } catch (const GeometryError& e) {
        std::fprintf(stderr, "geometry: %s\n", e.what());
        return 4;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver failure: %s (residual %.3e)\n", e.what(), e.residual());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "validation: %s\n", e.what());
        return 2;
    }
}

} // namespace

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

RunConfig parse_run_config(const fs::path& config_path) {
    json doc;
    try {
        std::ifstream in(config_path);
        if (!in) throw ValidationError("cannot open config " + config_path.string());
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");
    reject_unknown(doc, "config",
                   {"label", "out_dir", "q", "phi", "f", "body", "grid", "target_edge",
                    "dt_max", "cfl", "rescale_tq", "velocity_modes", "residual_tol",
                    "sustain_steps", "max_steps", "tq_drift_tol", "gamma_slack", "corridor",
                    "collapse_fraction", "snapshot_every", "plots", "tolerances"});

    const int grid = doc.contains("grid") ? as_integer(doc["grid"], "grid") : 128;
    const fs::path base_dir = config_path.has_parent_path() ? config_path.parent_path() : ".";
    FlowConfig flow(parse_body(need(doc, "body", "config"), grid, base_dir));
    flow.q = as_number(need(doc, "q", "config"), "q");
    flow.phi = parse_phi(need(doc, "phi", "config"));
    flow.density = parse_density(need(doc, "f", "config"));

    auto opt_num = [&](const char* key, double& slot) {
        if (doc.contains(key)) slot = as_number(doc[key], key);
    };
    auto opt_int = [&](const char* key, int& slot) {
        if (doc.contains(key)) slot = as_integer(doc[key], key);
    };
    opt_num("target_edge", flow.target_edge);
    opt_num("dt_max", flow.dt_max);
    opt_num("cfl", flow.cfl);
    if (doc.contains("rescale_tq")) flow.rescale_tq = as_boolean(doc["rescale_tq"], "rescale_tq");
    opt_int("velocity_modes", flow.velocity_modes);
    opt_num("residual_tol", flow.residual_tol);
    opt_int("sustain_steps", flow.sustain_steps);
    opt_int("max_steps", flow.max_steps);
    opt_num("tq_drift_tol", flow.tq_drift_tol);
    opt_num("gamma_slack", flow.gamma_slack);
    opt_num("corridor", flow.corridor);
    opt_num("collapse_fraction", flow.collapse_fraction);
    opt_int("snapshot_every", flow.snapshot_every);

    RunConfig cfg{std::move(flow)};
    if (doc.contains("label")) cfg.label = as_text(doc["label"], "label");
    if (!label_safe(cfg.label))
        throw ValidationError("config: label must be 1-64 characters of [A-Za-z0-9._-]");
    cfg.out_dir = doc.contains("out_dir") ? fs::path(as_text(doc["out_dir"], "out_dir"))
                                          : fs::path("runs") / cfg.label;
    if (doc.contains("plots")) cfg.plots = as_boolean(doc["plots"], "plots");
    cfg.grid = grid;
    if (doc.contains("tolerances")) {
        const json& tol = doc["tolerances"];
        if (!tol.is_object()) throw ValidationError("config: tolerances must be an object");
        reject_unknown(tol, "tolerances", {"cross_check", "identity_gap", "boundary"});
        if (tol.contains("cross_check"))
            cfg.cross_check_tol = as_number(tol["cross_check"], "tolerances.cross_check");
        if (tol.contains("identity_gap"))
            cfg.identity_gap_tol = as_number(tol["identity_gap"], "tolerances.identity_gap");
        if (tol.contains("boundary"))
            cfg.boundary_residual_tol = as_number(tol["boundary"], "tolerances.boundary");
    }
    if (!(cfg.cross_check_tol > 0.0) || !(cfg.identity_gap_tol > 0.0) ||
        !(cfg.boundary_residual_tol > 0.0))
        throw ValidationError("config: tolerances must be positive");
    return cfg;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_oracle(double radius, int dim, double q, const fs::path& out_dir) {
    return guarded([&]() {
        const BallOracle oracle = ball_oracle(radius, dim, q);
        fs::create_directories(out_dir);

        constexpr int kSamples = 32;
        std::vector<std::vector<double>> rows;
        for (int j = 0; j <= kSamples; ++j) {
            const double r = radius * j / kSamples;
            rows.push_back({r, oracle.value(r)});
        }
        write_csv((out_dir / "oracle.csv").string(), {"r", "u"}, rows);

        write_kv_csv(out_dir / "oracle_summary.csv",
                     {{"radius", format_g17(radius)},
                      {"dim", std::to_string(dim)},
                      {"q", format_g17(q)},
                      {"center_value", format_g17(oracle.center_value())},
                      {"boundary_gradient", format_g17(oracle.boundary_gradient())},
                      {"total_mass", format_g17(oracle.total_mass())},
                      {"rigidity", format_g17(oracle.rigidity())}});

        std::printf("u(0) = %.6f\n", oracle.center_value());
        std::printf("|grad u|(R) = %.6f\n", oracle.boundary_gradient());
        std::printf("T_q = %.6f\n", oracle.rigidity());
        return 0;
    });
}

int cmd_torsion(const fs::path& config_path) {
    return guarded([&]() {
        const RunConfig cfg = parse_run_config(config_path);
        fs::create_directories(cfg.out_dir);

        // Boundary node spacing matched to the interior edge target: a
        // coarser polygon would starve the gradient recovery and the
        // boundary-identity fits of resolution the interior already has.
        const SupportProfile& given = cfg.flow.initial;
        double perimeter = 0.0;
        for (int i = 0; i < given.size(); ++i) perimeter += given[i];
        perimeter *= given.step();
        int matched = static_cast<int>(std::lround(perimeter / cfg.flow.target_edge));
        if (matched % 2) ++matched;
        const SupportProfile p =
            matched > given.size() ? resample(given, matched) : given;

        MeshOptions mo;
        mo.target_edge = cfg.flow.target_edge;
        const BodyMesh mesh = triangulate(boundary_points(p, cfg.flow.scheme), mo);
        const TorsionField field = solve_torsion(mesh, cfg.flow.q, cfg.flow.solver);

        std::vector<std::vector<double>> nodes;
        for (int v = 0; v < mesh.vertex_count(); ++v)
            nodes.push_back({mesh.vertices[v].x, mesh.vertices[v].y, field.u[v]});
        write_csv((cfg.out_dir / "field.csv").string(), {"x", "y", "u"}, nodes);

        const std::vector<double> g = boundary_gradient_at_nodes(field);
        std::vector<std::vector<double>> boundary;
        for (int i = 0; i < p.size(); ++i) boundary.push_back({p.theta(i), g[i]});
        write_csv((cfg.out_dir / "boundary.csv").string(), {"theta", "gradient"}, boundary);

        const double volume = rigidity(field);
        const double from_boundary = rigidity_from_boundary(p, field, cfg.flow.scheme);
        const double cross_gap = std::abs(volume - from_boundary) / volume;
        const double identity_gap = dirichlet_identity_gap(field);
        const BoundaryIdentityReport rep = boundary_identity_check(field, p, cfg.flow.scheme);

        write_kv_csv(cfg.out_dir / "torsion_summary.csv",
                     {{"label", cfg.label},
                      {"q", format_g17(cfg.flow.q)},
                      {"target_edge", format_g17(cfg.flow.target_edge)},
                      {"triangles", std::to_string(mesh.triangle_count())},
                      {"newton_iterations", std::to_string(field.newton_iterations)},
                      {"total_mass", format_g17(total_mass(field))},
                      {"rigidity_volume", format_g17(volume)},
                      {"rigidity_boundary", format_g17(from_boundary)},
                      {"cross_check_gap", format_g17(cross_gap)},
                      {"dirichlet_identity_gap", format_g17(identity_gap)},
                      {"tangential_residual", format_g17(rep.max_tangential)},
                      {"mixed_residual", format_g17(rep.max_mixed)},
                      {"normal_residual", format_g17(rep.max_normal)}});

        struct Gate {
            const char* name;
            double value, bound;
        };
        const Gate gates[] = {
            {"cross-check gap", cross_gap, cfg.cross_check_tol},
            {"dirichlet identity gap", identity_gap, cfg.identity_gap_tol},
            {"tangential boundary residual", rep.max_tangential, cfg.boundary_residual_tol},
            {"normal boundary residual", rep.max_normal, cfg.boundary_residual_tol},
        };
        bool ok = true;
        std::printf("T_q = %.10g (volume), %.10g (boundary)\n", volume, from_boundary);
        for (const Gate& gate : gates) {
            const bool pass = gate.value <= gate.bound;
            ok = ok && pass;
            std::printf("%s: %.4g %s %.4g%s\n", gate.name, gate.value, pass ? "<=" : ">",
                        gate.bound, pass ? "" : " EXCEEDED");
        }
        return ok ? 0 : 5;
    });
}

int cmd_flow(const fs::path& config_path) {
    return guarded([&]() {
        const RunConfig cfg = parse_run_config(config_path);
        fs::create_directories(cfg.out_dir);
        const Trajectory traj = run(cfg.flow);

        RunArtifacts art;
        art.meta = {{"label", cfg.label},
                    {"q", format_g17(cfg.flow.q)},
                    {"termination", to_string(traj.termination)},
                    {"diagnostic", traj.diagnostic},
                    {"steps", std::to_string(traj.steps)}};
        art.initial = cfg.flow.initial;
        art.final_profile = traj.final_state->profile;
        for (const TrajectoryRecord& r : traj.records)
            art.rows.push_back({static_cast<double>(r.step), r.t, r.dt, r.lambda, r.tq,
                                r.gamma, r.residual, r.min_h, r.max_h, r.min_b});

        write_kv_csv(cfg.out_dir / "run_meta.csv", art.meta);
        write_csv((cfg.out_dir / "monitor.csv").string(), kMonitorHeader, art.rows);
        write_profile_csv((cfg.out_dir / "initial_profile.csv").string(), cfg.flow.initial);
        write_profile_csv((cfg.out_dir / "final_profile.csv").string(),
                          traj.final_state->profile);
        for (const auto& [step, profile] : traj.snapshots) {
            char name[32];
            std::snprintf(name, sizeof(name), "snapshot_%06d.csv", step);
            write_profile_csv((cfg.out_dir / name).string(), profile);
            if (step > 0) art.snapshots.push_back({step, profile});
        }

        write_kv_csv(cfg.out_dir / "summary.csv", summary_rows(art));
        if (cfg.plots) write_plots(cfg.out_dir, art);

        const std::vector<double>& first = art.rows.front();
        const std::vector<double>& last = art.rows.back();
        std::printf("run %s: %s after %d steps\n", cfg.label.c_str(),
                    to_string(traj.termination), traj.steps);
        std::printf("final residual %.4g, T_q drift %.3e\n", last[kResidual],
                    std::abs(last[kTq] - first[kTq]) / first[kTq]);
        if (!traj.diagnostic.empty()) std::printf("diagnostic: %s\n", traj.diagnostic.c_str());

        switch (traj.termination) {
        case Termination::converged: return 0;
        case Termination::max_steps: return 5;
        case Termination::convexity_lost: return 4;
        case Termination::solver_failure: return 3;
        }
        return 3;
    });
}

ReportBundle report_bundle(const fs::path& run_dir) {
    RunArtifacts art;
    art.meta = read_kv_csv(run_dir / "run_meta.csv");

    const CsvTable mon = read_csv((run_dir / "monitor.csv").string());
    if (mon.header != kMonitorHeader) throw ValidationError("monitor.csv: unexpected header");
    if (mon.rows.empty()) throw ValidationError("monitor.csv: no accepted states");
    art.rows = mon.rows;

    art.initial = read_profile_csv((run_dir / "initial_profile.csv").string());
    art.final_profile = read_profile_csv((run_dir / "final_profile.csv").string());

    std::vector<fs::path> snapshot_files;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("snapshot_", 0) == 0 && name.size() == 19 &&
            name.compare(15, 4, ".csv") == 0)
            snapshot_files.push_back(entry.path());
    }
    std::sort(snapshot_files.begin(), snapshot_files.end());
    for (const fs::path& f : snapshot_files) {
        const int step = std::atoi(f.filename().string().substr(9, 6).c_str());
        if (step > 0) art.snapshots.push_back({step, read_profile_csv(f.string())});
    }

    ReportBundle bundle;
    bundle.summary = summary_rows(art);
    write_kv_csv(run_dir / "summary.csv", bundle.summary);
    const std::vector<fs::path> plots = write_plots(run_dir, art);

    bundle.files = {run_dir / "run_meta.csv", run_dir / "monitor.csv",
                    run_dir / "initial_profile.csv", run_dir / "final_profile.csv"};
    bundle.files.insert(bundle.files.end(), snapshot_files.begin(), snapshot_files.end());
    bundle.files.push_back(run_dir / "summary.csv");
    bundle.files.insert(bundle.files.end(), plots.begin(), plots.end());
    for (const fs::path& f : bundle.files)
        if (!fs::exists(f)) throw ValidationError("missing artifact " + f.string());
    return bundle;
}

int cmd_report(const fs::path& run_dir) {
    return guarded([&]() {
        const ReportBundle bundle = report_bundle(run_dir);
        for (const auto& [key, value] : bundle.summary)
            std::printf("%s: %s\n", key.c_str(), value.c_str());
        std::printf("%zu files in %s\n", bundle.files.size(), run_dir.string().c_str());
        return 0;
    });
}

// ---------------------------------------------------------------------------
// dispatcher
// ---------------------------------------------------------------------------

namespace {

const char* kUsage =
    "torqflow - planar Orlicz-Minkowski torsion flow toolkit\n"
    "usage:\n"
    "  torqflow oracle R N Q --out DIR   closed-form ball torsion reference\n"
    "  torqflow torsion CONFIG           one torsion solve with cross-checks\n"
    "  torqflow flow CONFIG              normalized curvature flow run\n"
    "  torqflow report DIR               regenerate summary and plots\n"
    "exit codes: 0 success/converged, 1 usage, 2 validation,\n"
    "            3 solver failure, 4 convexity lost, 5 not converged\n";

bool parse_double_arg(const char* s, double& out) {
    char* end = nullptr;
    out = std::strtod(s, &end);
    return end != s && *end == '\0' && std::isfinite(out);
}

bool parse_int_arg(const char* s, int& out) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    out = static_cast<int>(v);
    return end != s && *end == '\0' && v == out;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    if (const char* threads = std::getenv("TORQFLOW_THREADS")) {
        int n = 1;
        if (parse_int_arg(threads, n) && n >= 1)
            Eigen::setNbThreads(n);
        else
            std::fprintf(stderr, "ignoring invalid TORQFLOW_THREADS '%s'\n", threads);
    } else {
        Eigen::setNbThreads(1);
    }

    if (argc < 2) {
        std::fputs(kUsage, stderr);
        return 1;
    }
    const std::string cmd = argv[1];
    if (cmd == "help" || cmd == "-h" || cmd == "--help") {
        std::fputs(kUsage, stdout);
        return 0;
    }
    if (cmd == "oracle") {
        double radius = 0, q = 0;
        int dim = 0;
        if (argc != 7 || !parse_double_arg(argv[2], radius) || !parse_int_arg(argv[3], dim) ||
            !parse_double_arg(argv[4], q) || std::strcmp(argv[5], "--out") != 0) {
            std::fputs(kUsage, stderr);
            return 1;
        }
        if (!(radius > 0.0) || dim < 1 || !(q > 1.0)) {
            std::fprintf(stderr, "oracle requires R > 0, N >= 1, Q > 1\n");
            return 1;
        }
        return cmd_oracle(radius, dim, q, argv[6]);
    }
    if (cmd == "torsion" || cmd == "flow") {
        if (argc != 3) {
            std::fputs(kUsage, stderr);
            return 1;
        }
        return cmd == "torsion" ? cmd_torsion(argv[2]) : cmd_flow(argv[2]);
    }
    if (cmd == "report") {
        if (argc != 3) {
            std::fputs(kUsage, stderr);
            return 1;
        }
        return cmd_report(argv[2]);
    }
    std::fprintf(stderr, "unknown command '%s'\n%s", cmd.c_str(), kUsage);
    return 1;
}

} // namespace torqflow
