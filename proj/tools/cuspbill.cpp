// cuspbill: experiments on the cusp billiard.
//
// Exit status: 0 success, 2 invalid input, 3 numerical failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cuspbill/cuspbill.hpp"

namespace fs = std::filesystem;
using namespace cuspbill;

namespace {

struct Context {
    RunConfig cfg;
    std::string config_path;
};

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out);
    const fs::path p = fs::path(cfg.out) / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + p.string());
    return os;
}

void write_json(const RunConfig& cfg, const std::string& name, const std::string& command, Json result) {
    auto os = open_out(cfg, name);
    os << artifact(cfg, command, std::move(result)).dump(2) << '\n';
}

using Table = std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>>;

// Tables go to a CSV file, or into the JSON document under "table".
void emit_table(const RunConfig& cfg, const std::string& stem, const Table& table, Json& doc) {
    if (cfg.format == Format::Csv) {
        auto os = open_out(cfg, stem + ".csv");
        csv_preamble(os, cfg);
        CsvWriter w(os);
        w.row(table.first);
        for (const auto& r : table.second) w.row(r);
    } else {
        Json rows = Json::array();
        for (const auto& r : table.second) {
            Json row;
            for (std::size_t i = 0; i < r.size(); ++i) row[table.first[i]] = r[i];
            rows.push_back(row);
        }
        doc["table"] = rows;
    }
}

std::string num(double v) { return csv_number(v); }

std::string brief(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string fmt_slope(double s, double e) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << s << " +- " << e;
    return os.str();
}

int cmd_check_hypotheses(const RunConfig& cfg) {
    const Profile p = cfg.make_profile();
    const auto grid = geometric_grid(1.0, 1e4, static_cast<std::size_t>(std::max(8L, cfg.resolution)));
    const HypothesisReport rep = check_hypotheses(p, grid);
    Json doc = to_json(rep);
    Table t;
    t.first = {"x", "H1", "H2", "H3", "H4", "H5"};
    for (std::size_t i = 0; i < rep.grid.size(); ++i) {
        std::vector<std::string> row{num(rep.grid[i])};
        for (std::size_t h = 0; h < 5; ++h) row.push_back(num(rep.witness[h][i]));
        t.second.push_back(row);
    }
    emit_table(cfg, "hypotheses", t, doc);
    write_json(cfg, "hypotheses.json", "check-hypotheses", doc);
    std::cout << "check-hypotheses: ";
    for (std::size_t h = 0; h < 5; ++h) std::cout << kHypothesisNames[h] << (rep.pass[h] ? " pass " : " FAIL ");
    std::cout << '\n';
    return rep.all_pass() ? 0 : 3;
}

int cmd_orbit(const RunConfig& cfg) {
    const Billiard b(cfg.make_profile(), BilliardOptions{1e-12, 1e-12, cfg.collision_budget});
    PhasePoint z{Section::M4, b.f0() - cfg.y, cfg.phi};
    Table t;
    t.first = {"step", "wall", "x", "y", "dir_x", "dir_y", "flight_time", "tangential"};
    double time = 0.0;
    for (long k = 1; k <= cfg.steps; ++k) {
        auto [next, seg] = b.step_section(z, Section::M5);
        for (const auto& ev : seg.events) {
            time += ev.flight_time;
            t.second.push_back({std::to_string(k), wall_name(ev.point.wall), num(ev.point.pos.x), num(ev.point.pos.y),
                                num(ev.outgoing.x), num(ev.outgoing.y), num(ev.flight_time), ev.tangential ? "1" : "0"});
        }
        z = next;
    }
    Json doc;
    doc["start"] = {{"r", b.f0() - cfg.y}, {"phi", cfg.phi}};
    doc["end"] = {{"section", section_name(z.section)}, {"r", z.r}, {"phi", z.phi}};
    doc["events"] = t.second.size();
    doc["total_time"] = time;
    emit_table(cfg, "orbit", t, doc);
    write_json(cfg, "orbit.json", "orbit", doc);
    std::cout << "orbit: " << t.second.size() << " collisions in " << cfg.steps << " T5 steps\n";
    return 0;
}

int cmd_excursion(const RunConfig& cfg) {
    const Excursion e = excursion_from_wall(cfg.y, cfg.phi, ExcursionOptions{cfg.collision_budget, cfg.gamma_bar});
    const ExcursionDiagnostics d = excursion_diagnostics(e);
    Table t;
    t.first = {"n", "x", "t", "gamma", "tau", "omega", "u"};
    for (std::size_t i = 0; i < e.x.size(); ++i) {
        t.second.push_back({std::to_string(i + 1), num(e.x[i]), num(e.t[i]), num(e.gamma[i]), num(e.tau[i]), num(d.omega[i]),
                            i < d.u.size() ? num(d.u[i]) : ""});
    }
    Json doc;
    doc["N"] = e.N;
    doc["N1"] = e.N1;
    doc["N2"] = e.N2;
    doc["N3"] = e.N3;
    doc["gamma0"] = e.gamma0;
    doc["censored"] = e.censored;
    doc["precision_loss"] = e.precision_loss;
    doc["omega_lower_bound_holds"] = d.lower_all;
    doc["omega_upper_excess"] = detail::finite_or_null(d.upper_excess);
    doc["sum_inv_t2"] = d.sum_inv_t2;
    emit_table(cfg, "excursion", t, doc);
    write_json(cfg, "excursion.json", "excursion", doc);
    std::cout << "excursion: N = " << e.N << " (N1 " << e.N1 << ", N2 " << e.N2 << ", N3 " << e.N3 << ")"
              << (e.censored ? " censored" : "") << '\n';
    return 0;
}

std::vector<Excursion> make_ensemble(const RunConfig& cfg) {
    EnsembleOptions o;
    o.N_lo = cfg.n_min;
    o.N_hi = cfg.n_max;
    o.x_min = cfg.x_min;
    o.gamma_bar = cfg.gamma_bar;
    o.threads = cfg.threads;
    return conditioned_ensemble(static_cast<std::size_t>(cfg.ensemble), cfg.seed, o);
}

int cmd_exponents(const RunConfig& cfg) {
    const auto ens = make_ensemble(cfg);
    const ExponentReport rep = fit_excursion_exponents(ens);
    Json doc = to_json(rep);
    Table t;
    t.first = {"N", "N1", "N2", "N3", "x1", "gamma1", "xN2"};
    for (const auto& e : ens) {
        t.second.push_back({std::to_string(e.N), std::to_string(e.N1), std::to_string(e.N2), std::to_string(e.N3), num(e.x[0]),
                            num(e.gamma[0]), num(e.x[static_cast<std::size_t>(e.N2 - 1)])});
    }
    emit_table(cfg, "ensemble", t, doc);
    write_json(cfg, "exponents.json", "exponents", doc);
    std::cout << "exponents: xN2 " << fmt_slope(rep.xN2_vs_N.slope, rep.xN2_vs_N.stderr_) << ", t1 "
              << fmt_slope(rep.t1_vs_N.slope, rep.t1_vs_N.stderr_) << ", gamma_n "
              << fmt_slope(rep.gamman_vs_n.slope, rep.gamman_vs_n.stderr_) << ", tau_n "
              << fmt_slope(rep.taun_vs_n.slope, rep.taun_vs_n.stderr_) << '\n';
    return 0;
}

int cmd_expansion(const RunConfig& cfg) {
    const Billiard b(cfg.make_profile(), BilliardOptions{1e-12, 1e-12, cfg.collision_budget});
    const auto ens = make_ensemble(cfg);
    HyperbolicityOptions ho;
    ho.B0 = cfg.B0;
    ho.threads = cfg.threads;
    const HyperbolicityReport rep = hyperbolicity_checks(b, ens, 1000, cfg.seed, ho);
    Json doc = to_json(rep);
    const Excursion e = excursion_from_wall(cfg.y, cfg.phi, ExcursionOptions{cfg.collision_budget, cfg.gamma_bar});
    if (!e.censored) {
        const ExpansionLedger L = expansion_ledger(e, cfg.B0);
        doc["ledger"] = {{"N", e.N},
                         {"log_entering", L.log_entering},
                         {"log_turning", L.log_turning},
                         {"log_exiting", L.log_exiting},
                         {"log_total", L.log_total},
                         {"sum_lambda_sq", L.sum_lambda_sq}};
        Table t;
        t.first = {"n", "K", "B", "lambda", "cum_log_product"};
        for (std::size_t n = 0; n < L.lambda.size(); ++n) {
            t.second.push_back({std::to_string(n), num(L.K[n]), num(L.B[n]), num(L.lambda[n]), num(L.cum_log[n])});
        }
        emit_table(cfg, "ledger", t, doc);
    }
    write_json(cfg, "expansion.json", "expansion", doc);
    std::cout << "expansion: log-total slope " << rep.total_slope << ", entering " << rep.entering_slope << ", exiting "
              << rep.exiting_slope << ", cone violations " << rep.cone_violations << '\n';
    return 0;
}

int cmd_return_hist(const RunConfig& cfg) {
    if (cfg.cap < 16) throw ValidationError("return-hist: cap must be >= 16");
    const Billiard b(cfg.make_profile(), BilliardOptions{1e-12, 1e-12, cfg.collision_budget});
    const M4Sampler sampler = M4Sampler::whole(cfg.seed, b.f0());
    const ReturnHistogram h =
        return_histogram(b, sampler, static_cast<std::size_t>(cfg.samples), HistogramOptions{cfg.cap, cfg.threads, 4096});
    Json fits;
    fits["histogram"] = to_json(h);
    double slope = std::nan("");
    double err = 0.0;
    try {
        const PowerLawFit f = fit_return_law(h, 16, cfg.cap / 4);
        fits["return_law"] = to_json(f);
        slope = f.slope;
        err = f.stderr_;
        fits["tail_law"] = to_json(fit_tail_law(h, 16, cfg.cap / 4));
    } catch (const InsufficientData& e) {
        fits["fit_error"] = e.what();
    }
    {
        auto os = open_out(cfg, "histogram.csv");
        csv_preamble(os, cfg);
        CsvWriter w(os);
        w.row({"N", "count", "mu_hat"});
        for (const auto& [N, c] : h.counts) w.row({std::to_string(N), std::to_string(c), num(h.mu_hat(N))});
        w.row({"censored", std::to_string(h.censored), num(h.mu_censored())});
    }
    write_json(cfg, "return_fit.json", "return-hist", fits);
    std::cout << "return-hist: "
              << (std::isnan(slope) ? std::string("no slope (too few counts)") : "slope " + fmt_slope(slope, err))
              << " over N in [16, " << cfg.cap / 4 << "], " << h.censored << " censored of " << h.total << '\n';
    return 0;
}

int cmd_correlation(const RunConfig& cfg) {
    const Billiard b(cfg.make_profile(), BilliardOptions{1e-12, 1e-12, cfg.collision_budget});
    CorrelationOptions o;
    o.threads = cfg.threads;
    o.min_hits = cfg.min_hits;
    const bool stratified = cfg.strategy == "stratified" || (cfg.strategy == "auto" && cfg.m >= 64);
    Json doc;
    if (stratified) {
        const KappaCalibration k = calibrate_kappa(b, cfg.m, 400'000, cfg.seed + 1, 0.99, cfg.threads);
        o.strategy = Sampling::CornerStratified;
        o.kappa = k.kappa;
        doc["kappa_calibration"] = {{"kappa", k.kappa}, {"points", k.points}, {"trials", k.trials}};
    }
    const CorrelationEstimate est = correlation_estimate(b, cfg.m, cfg.trials, cfg.seed, o);
    doc["estimate"] = to_json(est);
    if (est.hits >= 2) {
        const SymmetryTest s = reflection_symmetry(est.image_points);
        doc["image_symmetry"] = {{"positive", s.positive},
                                 {"negative", s.negative},
                                 {"sign_p", s.sign_p},
                                 {"ks_r_p", s.ks_r.p},
                                 {"ks_abs_phi_p", s.ks_abs_phi.p}};
    }
    Table t;
    t.first = {"r", "phi", "image_r", "image_phi"};
    for (std::size_t i = 0; i < est.hit_points.size(); ++i) {
        t.second.push_back({num(est.hit_points[i].r), num(est.hit_points[i].phi), num(est.image_points[i].r),
                            num(est.image_points[i].phi)});
    }
    emit_table(cfg, "correlation_hits", t, doc);
    write_json(cfg, "correlation.json", "correlation", doc);
    if (est.hits < 50) std::cerr << "warning: only " << est.hits << " hits, fewer than 50\n";
    std::cout << "correlation: m " << cfg.m << ", " << est.hits << " hits in " << est.trials << " trials, mu "
              << (est.zero_hits ? "< " + brief(est.upper_bound) : brief(est.mu_EmTEm) + " +- " + brief(est.stderr_)) << '\n';
    return 0;
}

int cmd_strips(const RunConfig& cfg) {
    const Billiard b(cfg.make_profile(), BilliardOptions{1e-12, 1e-12, cfg.collision_budget});
    std::vector<double> Ns, off, len, wid;
    Table t;
    t.first = {"N", "found", "offset_r1", "thickness_phi", "boundary_slope", "width", "length_Sstar", "y_star"};
    Json probes = Json::array();
    for (long N = cfg.strip_lo; N <= cfg.strip_hi; N *= 2) {
        const StripGeometry g = strip_probe(b, N, static_cast<int>(cfg.probes));
        probes.push_back(to_json(g));
        t.second.push_back({std::to_string(N), g.found ? "1" : "0", num(g.offset_r1), num(g.thickness_phi),
                            num(g.boundary_slope), num(g.width), num(g.length_Sstar), num(g.y_star)});
        if (g.found) {
            Ns.push_back(static_cast<double>(N));
            off.push_back(g.offset_r1);
            len.push_back(g.length_Sstar);
            wid.push_back(g.width);
        }
    }
    Json doc;
    doc["probes"] = probes;
    std::string summary = "strips: too few probes for slopes";
    if (Ns.size() >= 4) {
        const auto fo = fit_power_law(Ns, off);
        const auto fl = fit_power_law(Ns, len);
        const auto fw = fit_power_law(Ns, wid);
        doc["offset_fit"] = to_json(fo);
        doc["length_fit"] = to_json(fl);
        doc["width_fit"] = to_json(fw);
        summary = "strips: offset " + fmt_slope(fo.slope, fo.stderr_) + ", length " + fmt_slope(fl.slope, fl.stderr_) +
                  ", width " + fmt_slope(fw.slope, fw.stderr_);
    }
    emit_table(cfg, "strips", t, doc);
    write_json(cfg, "strips.json", "strips", doc);
    std::cout << summary << '\n';
    return 0;
}

int cmd_singularities(const RunConfig& cfg) {
    const Billiard b(cfg.make_profile(), BilliardOptions{1e-12, 1e-12, cfg.collision_budget});
    Table t;
    t.first = {"kind", "r", "phi"};
    Json doc;
    for (auto kind : {SingularityKind::S1plus, SingularityKind::S2plus, SingularityKind::S1minus, SingularityKind::S2minus}) {
        const SingularityCurve c = trace_singularity(b, kind, static_cast<int>(cfg.resolution));
        for (const auto& p : c.points) t.second.push_back({singularity_name(kind), num(p.r), num(p.phi)});
        doc[singularity_name(kind)] = {{"points", c.points.size()}, {"omitted", c.omitted_r.size()}};
    }
    emit_table(cfg, "singularities", t, doc);
    write_json(cfg, "singularities.json", "singularities", doc);
    std::cout << "singularities: " << t.second.size() << " points on 4 curves\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cusp billiard experiments"};
    app.require_subcommand(1);
    Context ctx;

    struct Command {
        const char* name;
        const char* help;
        std::function<int(const RunConfig&)> run;
    };
    const std::vector<Command> commands{
        {"check-hypotheses", "Check the growth hypotheses on the profile", cmd_check_hypotheses},
        {"orbit", "Dump the collisions of one orbit from the wall", cmd_orbit},
        {"excursion", "Simulate one cusp excursion from the wall", cmd_excursion},
        {"exponents", "Fit excursion exponents over a conditioned ensemble", cmd_exponents},
        {"expansion", "Expansion ledger and hyperbolicity checks", cmd_expansion},
        {"return-hist", "Histogram of return times to the wall", cmd_return_hist},
        {"correlation", "Estimate mu(E_m n T5^(m+1) E_m)", cmd_correlation},
        {"strips", "Probe the geometry of E_N near the corner", cmd_strips},
        {"singularities", "Trace the singularity curves", cmd_singularities},
    };

    // flag -> config key
    const std::vector<std::pair<std::string, std::string>> flags{
        {"--profile", "profile"}, {"--seed", "seed"},       {"--samples", "samples"},   {"--cap", "cap"},
        {"--gamma-bar", "gamma_bar"}, {"--x-min", "x_min"}, {"--out", "out"},           {"--format", "format"},
        {"--threads", "threads"}, {"--ensemble", "ensemble"}, {"--nmin", "n_min"},      {"--nmax", "n_max"},
        {"--trials", "trials"},   {"--m", "m"},             {"--min-hits", "min_hits"}, {"--strategy", "strategy"},
        {"--y", "y"},             {"--phi", "phi"},         {"--steps", "steps"},       {"--resolution", "resolution"},
        {"--probes", "probes"},   {"--B0", "B0"},           {"--budget", "collision_budget"},
        {"--strip-lo", "strip_lo"}, {"--strip-hi", "strip_hi"}};

    std::map<std::string, std::string> values;
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", ctx.config_path, "key=value config file");
        for (const auto& [flag, key] : flags) sub->add_option(flag, values[key]);
        subs.emplace_back(sub, &c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (const char* env = std::getenv("CUSPBILL_OUT")) ctx.cfg.out = env;
        if (!ctx.config_path.empty()) load_config(ctx.config_path, ctx.cfg);
        for (const auto& [flag, key] : flags) {
            if (!values[key].empty()) ctx.cfg.set(key, values[key]);
        }
        ctx.cfg.validate();
        for (const auto& [sub, cmd] : subs) {
            if (sub->parsed()) return cmd->run(ctx.cfg);
        }
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
