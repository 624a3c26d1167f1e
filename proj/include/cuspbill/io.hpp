#pragma once

// Run configuration (plain key=value text), RFC-4180 CSV output and JSON
// serialization of the result types.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "billiard.hpp"
#include "cusp.hpp"
#include "errors.hpp"
#include "profile.hpp"
#include "stats.hpp"
#include "tangent.hpp"

namespace cuspbill {

inline constexpr std::string_view kVersion = "1.0.0";

using Json = nlohmann::ordered_json;

enum class Format { Csv, Json };

struct RunConfig {
    std::string profile = "reciprocal";
    double scale = 1.0; // power profile: scale / (x + shift)^exponent
    double shift = 1.0;
    double exponent = 1.0;
    double theta = 2.0;
    std::uint64_t seed = 1;
    long collision_budget = 10'000'000;
    long cap = 4096;
    long samples = 1'000'000;
    long ensemble = 2000;
    long n_min = 100;
    long n_max = 100'000;
    double gamma_bar = 0.5;
    double x_min = 0.0;
    double B0 = 0.0;
    long trials = 1'000'000;
    long min_hits = 50;
    long m = 16;
    long resolution = 200;
    long probes = 4;
    double y = 0.1;   // wall height of single orbits
    double phi = -0.1;
    long steps = 100;
    std::string strategy = "auto"; // plain, stratified, or auto (stratified for m >= 64)
    long strip_lo = 64;
    long strip_hi = 1024;
    std::string out = ".";
    Format format = Format::Csv;
    unsigned threads = 1; // not part of the echoed config

    /// Sets one key from its text value; unknown keys and bad values raise
    /// ValidationError.
    void set(const std::string& key, const std::string& value) {
        auto as_double = [&](double& dst) {
            std::size_t pos = 0;
            try {
                dst = std::stod(value, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != value.size() || !std::isfinite(dst)) throw ValidationError("config: bad number for " + key + ": " + value);
        };
        auto as_long = [&](long& dst) {
            std::size_t pos = 0;
            try {
                dst = std::stol(value, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != value.size()) throw ValidationError("config: bad integer for " + key + ": " + value);
        };
        if (key == "profile") {
            if (value != "reciprocal" && value != "power") throw ValidationError("config: unknown profile " + value);
            profile = value;
        } else if (key == "scale") {
            as_double(scale);
        } else if (key == "shift") {
            as_double(shift);
        } else if (key == "exponent") {
            as_double(exponent);
        } else if (key == "theta") {
            as_double(theta);
        } else if (key == "seed") {
            long v = 0;
            as_long(v);
            if (v < 0) throw ValidationError("config: seed must be >= 0");
            seed = static_cast<std::uint64_t>(v);
        } else if (key == "collision_budget") {
            as_long(collision_budget);
        } else if (key == "cap") {
            as_long(cap);
        } else if (key == "samples") {
            as_long(samples);
        } else if (key == "ensemble") {
            as_long(ensemble);
        } else if (key == "n_min") {
            as_long(n_min);
        } else if (key == "n_max") {
            as_long(n_max);
        } else if (key == "gamma_bar") {
            as_double(gamma_bar);
        } else if (key == "x_min") {
            as_double(x_min);
        } else if (key == "B0") {
            as_double(B0);
        } else if (key == "trials") {
            as_long(trials);
        } else if (key == "min_hits") {
            as_long(min_hits);
        } else if (key == "m") {
            as_long(m);
        } else if (key == "resolution") {
            as_long(resolution);
        } else if (key == "probes") {
            as_long(probes);
        } else if (key == "y") {
            as_double(y);
        } else if (key == "phi") {
            as_double(phi);
        } else if (key == "steps") {
            as_long(steps);
        } else if (key == "strategy") {
            if (value != "plain" && value != "stratified" && value != "auto") {
                throw ValidationError("config: strategy must be plain, stratified or auto");
            }
            strategy = value;
        } else if (key == "strip_lo") {
            as_long(strip_lo);
        } else if (key == "strip_hi") {
            as_long(strip_hi);
        } else if (key == "out") {
            out = value;
        } else if (key == "format") {
            if (value == "csv") {
                format = Format::Csv;
            } else if (value == "json") {
                format = Format::Json;
            } else {
                throw ValidationError("config: format must be csv or json");
            }
        } else if (key == "threads") {
            long v = 0;
            as_long(v);
            if (v < 1) throw ValidationError("config: threads must be >= 1");
            threads = static_cast<unsigned>(v);
        } else {
            throw ValidationError("config: unknown key " + key);
        }
    }

    void validate() const {
        if (collision_budget < 1) throw ValidationError("config: collision_budget must be >= 1");
        if (cap < 1) throw ValidationError("config: cap must be >= 1");
        if (samples < 1 || ensemble < 1 || trials < 1) throw ValidationError("config: sample sizes must be >= 1");
        if (n_min < 1 || n_max <= n_min) throw ValidationError("config: need 1 <= n_min < n_max");
        if (!(gamma_bar > 0.0) || !(gamma_bar < 1.5707963267948966)) throw ValidationError("config: gamma_bar must lie in (0, pi/2)");
        if (x_min < 0.0) throw ValidationError("config: x_min must be >= 0");
        if (B0 < 0.0) throw ValidationError("config: B0 must be >= 0");
        if (m < 1 || min_hits < 0 || probes < 2 || resolution < 2 || steps < 1) {
            throw ValidationError("config: need m >= 1, min_hits >= 0, probes >= 2, resolution >= 2, steps >= 1");
        }
        if (strip_lo < 1 || strip_hi < strip_lo) throw ValidationError("config: need 1 <= strip_lo <= strip_hi");
        if (profile == "power" && !(scale > 0.0 && shift > 0.0 && exponent > 0.0)) {
            throw ValidationError("config: power profile needs positive scale, shift, exponent");
        }
    }

    [[nodiscard]] Profile make_profile() const {
        if (profile == "reciprocal") return Profile::reciprocal(theta);
        return Profile::power_law(scale, shift, exponent, theta);
    }

    [[nodiscard]] Json to_json() const {
        Json j;
        j["profile"] = profile;
        j["scale"] = scale;
        j["shift"] = shift;
        j["exponent"] = exponent;
        j["theta"] = theta;
        j["seed"] = seed;
        j["collision_budget"] = collision_budget;
        j["cap"] = cap;
        j["samples"] = samples;
        j["ensemble"] = ensemble;
        j["n_min"] = n_min;
        j["n_max"] = n_max;
        j["gamma_bar"] = gamma_bar;
        j["x_min"] = x_min;
        j["B0"] = B0;
        j["trials"] = trials;
        j["min_hits"] = min_hits;
        j["m"] = m;
        j["resolution"] = resolution;
        j["probes"] = probes;
        j["y"] = y;
        j["phi"] = phi;
        j["steps"] = steps;
        j["strategy"] = strategy;
        j["strip_lo"] = strip_lo;
        j["strip_hi"] = strip_hi;
        j["format"] = format == Format::Csv ? "csv" : "json";
        return j;
    }
};

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
inline void parse_config(std::istream& in, RunConfig& cfg) {
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string{};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

inline void load_config(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    parse_config(in, cfg);
}

// CSV

[[nodiscard]] inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

[[nodiscard]] inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) out_ << ',';
            out_ << csv_field(fields[i]);
        }
        out_ << "\r\n";
    }

private:
    std::ostream& out_;
};

/// Provenance lines ahead of the CSV header: '# version=...' and one
/// '# key=value' line per config entry.
inline void csv_preamble(std::ostream& out, const RunConfig& cfg) {
    out << "# version=" << kVersion << "\r\n";
    const Json echo = cfg.to_json();
    for (const auto& [k, v] : echo.items()) {
        out << "# " << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << "\r\n";
    }
}

// JSON

namespace detail {

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json_series(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(finite_or_null(x));
    return a;
}

} // namespace detail

[[nodiscard]] inline Json to_json(const HypothesisReport& r) {
    Json j;
    j["theta"] = r.theta;
    j["threshold"] = r.threshold;
    j["grid"] = detail::to_json_series(r.grid);
    Json hs = Json::array();
    for (int h = 0; h < 5; ++h) {
        Json e;
        e["name"] = kHypothesisNames[static_cast<std::size_t>(h)];
        e["pass"] = r.pass[static_cast<std::size_t>(h)];
        e["constant"] = detail::finite_or_null(r.constant[static_cast<std::size_t>(h)]);
        e["witness"] = detail::to_json_series(r.witness[static_cast<std::size_t>(h)]);
        hs.push_back(e);
    }
    j["hypotheses"] = hs;
    j["all_pass"] = r.all_pass();
    return j;
}

[[nodiscard]] inline Json to_json(const ExponentFit& f) {
    Json j;
    j["name"] = f.name;
    j["slope"] = detail::finite_or_null(f.slope);
    j["stderr"] = detail::finite_or_null(f.stderr_);
    j["intercept"] = detail::finite_or_null(f.intercept);
    j["residual_rms"] = detail::finite_or_null(f.residual_rms);
    j["range"] = {detail::finite_or_null(f.range_lo), detail::finite_or_null(f.range_hi)};
    j["points"] = f.points;
    return j;
}

[[nodiscard]] inline Json to_json(const ExponentReport& r) {
    Json j;
    j["excursions"] = r.excursions;
    j["N_range"] = {r.N_min, r.N_max};
    Json fits = Json::array();
    for (const ExponentFit* f : {&r.t1_vs_N, &r.x1_vs_N, &r.tN2_vs_N, &r.xN2_vs_N, &r.xn_vs_n, &r.gamman_vs_n,
                                 &r.taun_vs_n, &r.N_vs_gamma1}) {
        fits.push_back(to_json(*f));
    }
    j["fits"] = fits;
    j["omega_ratio"] = {detail::finite_or_null(r.omega_ratio_min), detail::finite_or_null(r.omega_ratio_max)};
    return j;
}

[[nodiscard]] inline Json to_json(const PowerLawFit& f) {
    Json j;
    j["slope"] = detail::finite_or_null(f.slope);
    j["intercept"] = detail::finite_or_null(f.intercept);
    j["stderr"] = detail::finite_or_null(f.stderr_);
    j["bin_lo"] = f.bin_lo;
    j["bin_hi"] = f.bin_hi;
    j["binning"] = f.binning == Binning::Dyadic ? "dyadic" : "raw";
    j["points"] = f.points;
    return j;
}

[[nodiscard]] inline Json to_json(const ReturnHistogram& h) {
    Json j;
    j["seed"] = h.seed;
    j["cap"] = h.cap;
    j["total"] = h.total;
    j["censored"] = h.censored;
    j["singular"] = h.singular;
    j["normalizer"] = h.normalizer;
    Json c = Json::array();
    for (const auto& [N, n] : h.counts) c.push_back({N, n});
    j["counts"] = c;
    return j;
}

[[nodiscard]] inline Json to_json(const CorrelationEstimate& e) {
    Json j;
    j["m"] = e.m;
    j["strategy"] = sampling_name(e.strategy);
    j["kappa"] = e.kappa;
    j["region_measure"] = e.region_measure;
    j["seed"] = e.seed;
    j["trials"] = e.trials;
    j["trials_A"] = e.trials_A;
    j["hits"] = e.hits;
    j["hits_A"] = e.hits_A;
    j["singular"] = e.singular;
    j["mu_EmTEm"] = e.mu_EmTEm;
    j["stderr"] = e.stderr_;
    j["mu_AtailTA"] = e.mu_AtailTA;
    j["stderr_A"] = e.stderr_A;
    j["zero_hits"] = e.zero_hits;
    if (e.zero_hits) j["upper_bound_95"] = e.upper_bound;
    return j;
}

[[nodiscard]] inline Json to_json(const StripGeometry& g) {
    Json j;
    j["N"] = g.N;
    j["found"] = g.found;
    j["offset_r1"] = g.offset_r1;
    j["thickness_phi"] = g.thickness_phi;
    j["boundary_slope"] = g.boundary_slope;
    j["width"] = g.width;
    j["length_Sstar"] = g.length_Sstar;
    j["y_star"] = g.y_star;
    if (!g.note.empty()) j["note"] = g.note;
    return j;
}

[[nodiscard]] inline Json to_json(const HyperbolicityReport& r) {
    Json j;
    j["seed"] = r.seed;
    j["cone_samples"] = r.cone_samples;
    j["cone_violations"] = r.cone_violations;
    j["cone_skipped"] = r.cone_skipped;
    j["measure_samples"] = r.measure_samples;
    j["measure_defect_max"] = r.measure_defect_max;
    j["ledger_vs_direct_max"] = r.ledger_vs_direct_max;
    j["total_slope"] = detail::finite_or_null(r.total_slope);
    j["entering_slope"] = detail::finite_or_null(r.entering_slope);
    j["exiting_slope"] = detail::finite_or_null(r.exiting_slope);
    j["N"] = r.N;
    j["total_over_N"] = detail::to_json_series(r.total_over_N);
    j["log_entering_over_lnN"] = detail::to_json_series(r.log_entering_over_lnN);
    j["log_exiting_over_lnN"] = detail::to_json_series(r.log_exiting_over_lnN);
    j["sum_lambda_sq"] = detail::to_json_series(r.sum_lambda_sq);
    j["sum_lambda_turning"] = detail::to_json_series(r.sum_lambda_turning);
    return j;
}

/// {"version", "config", "result"} document.
[[nodiscard]] inline Json artifact(const RunConfig& cfg, std::string_view command, Json result) {
    Json j;
    j["tool"] = "cuspbill";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = cfg.to_json();
    j["result"] = std::move(result);
    return j;
}

} // namespace cuspbill
