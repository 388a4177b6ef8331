#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsdisp/corrector.hpp"
#include "hsdisp/dispersion.hpp"
#include "hsdisp/material.hpp"
#include "hsdisp/minimizer.hpp"
#include "hsdisp/packing.hpp"
#include "hsdisp/validate.hpp"

namespace {

using hsdisp::degenerate_input;
using hsdisp::format_double17;
using hsdisp::numerical_failure;
using nlohmann::json;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

std::string upper_snake(const std::string& key) {
    std::string out;
    for (char c : key) out += c == '-' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

// Flag/env/config/default precedence: CLI11 resolves flag over env natively,
// and a config value is applied only to options that saw neither.
struct Registry {
    std::map<std::string, std::pair<CLI::Option*, std::function<void(const json&)>>> entries;
};

template <class T>
std::function<void(const json&)> setter(const std::string& key, T& var) {
    return [key, &var](const json& v) {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string())
                throw degenerate_input("config: key '" + key + "' must be a string");
            var = v.get<std::string>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer())
                throw degenerate_input("config: key '" + key + "' must be an integer");
            var = v.get<T>();
        } else {
            if (!v.is_number())
                throw degenerate_input("config: key '" + key + "' must be a number");
            var = v.get<double>();
        }
    };
}

template <class T>
CLI::Option* reg(Registry& r, CLI::App* cmd, const std::string& key, T& var,
                 const std::string& desc) {
    auto* o = cmd->add_option("--" + key, var, desc);
    o->envname("HSDISP_" + upper_snake(key));
    r.entries[key] = {o, setter(key, var)};
    return o;
}

void apply_config(const std::string& path, const Registry& global, const Registry& sub) {
    std::ifstream f(path);
    if (!f) throw degenerate_input("config: cannot open " + path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw degenerate_input(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw degenerate_input("config: top level must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::pair<CLI::Option*, std::function<void(const json&)>>* ent = nullptr;
        if (auto hit = sub.entries.find(it.key()); hit != sub.entries.end())
            ent = &hit->second;
        else if (auto ghit = global.entries.find(it.key()); ghit != global.entries.end())
            ent = &ghit->second;
        if (!ent) throw degenerate_input("config: unknown key '" + it.key() + "'");
        if (ent->first->count() == 0) ent->second(it.value());
    }
}

void require_set(const char* flag, bool ok) {
    if (!ok) throw degenerate_input(std::string("missing required option ") + flag);
}

// ---- output plumbing ----

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    q += "\"";
    return q;
}

std::string num17(double x) { return std::isfinite(x) ? format_double17(x) : "null"; }

// One flat record rendered identically as a JSON object or a two-line CSV.
struct FlatRecord {
    struct Field {
        std::string key, jsonv, csvv;
    };
    std::vector<Field> fields;

    void add(const std::string& k, double v) { fields.push_back({k, num17(v), num17(v)}); }
    void add_uint(const std::string& k, std::size_t v) {
        fields.push_back({k, std::to_string(v), std::to_string(v)});
    }
    void add_str(const std::string& k, const std::string& s) {
        fields.push_back({k, json(s).dump(), csv_field(s)});
    }
    std::string to_json() const {
        std::string out = "{\n";
        for (std::size_t i = 0; i < fields.size(); ++i)
            out += "  \"" + fields[i].key + "\": " + fields[i].jsonv +
                   (i + 1 < fields.size() ? ",\n" : "\n");
        out += "}\n";
        return out;
    }
    std::string to_csv() const {
        std::string head, row;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            head += (i ? "," : "") + fields[i].key;
            row += (i ? "," : "") + fields[i].csvv;
        }
        return head + "\n" + row + "\n";
    }
    std::string render(const std::string& emit) const {
        return emit == "csv" ? to_csv() : to_json();
    }
};

void deliver(const std::string& body, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(body.data(), 1, body.size(), stdout);
        return;
    }
    const std::string tmp = out_path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
        if (!f) throw numerical_failure("output: cannot open " + tmp);
        f << body;
        f.flush();
        if (!f) throw numerical_failure("output: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), out_path.c_str()) != 0)
        throw numerical_failure("output: cannot move " + tmp + " into place");
}

// ---- shared argument blocks ----

struct Globals {
    std::string out;
    std::string emit = "json";
    std::uint64_t seed = 7;
    int threads = 4;
};

struct ProfileArgs {
    double alpha = kUnset, beta = kUnset, theta = kUnset;
    int dim = 0;
};

void reg_profile(Registry& r, CLI::App* c, ProfileArgs& pa) {
    reg(r, c, "alpha", pa.alpha, "core conductivity");
    reg(r, c, "beta", pa.beta, "shell conductivity (>= alpha)");
    reg(r, c, "theta", pa.theta, "core volume fraction in (0,1)");
    reg(r, c, "dim", pa.dim, "space dimension");
}

hsdisp::material::TwoPhaseProfile build_profile(const ProfileArgs& pa) {
    require_set("--alpha", std::isfinite(pa.alpha));
    require_set("--beta", std::isfinite(pa.beta));
    require_set("--theta", std::isfinite(pa.theta));
    require_set("--dim", pa.dim != 0);
    return hsdisp::material::make_profile(pa.alpha, pa.beta, pa.theta, pa.dim);
}

struct SearchArgs {
    int grid = 0;
    int top_k = 0;
    double radius_tol = kUnset;
    double batch_tol = kUnset;
};

void reg_search(Registry& r, CLI::App* c, SearchArgs& sa) {
    reg(r, c, "grid", sa.grid, "scan grid points per axis (0: dimension default)");
    reg(r, c, "top-k", sa.top_k, "basin candidates kept per insertion (0: default)");
    reg(r, c, "radius-tol", sa.radius_tol, "pattern-search step floor");
    reg(r, c, "batch-tol", sa.batch_tol, "radius window treated as one tie batch");
}

hsdisp::packing::SearchSpec build_search(const SearchArgs& sa, int threads) {
    hsdisp::packing::SearchSpec sp;
    sp.threads = threads;
    if (sa.grid > 0) sp.grid_per_axis = sa.grid;
    if (sa.top_k > 0) sp.top_k = sa.top_k;
    if (std::isfinite(sa.radius_tol)) sp.radius_tol = sa.radius_tol;
    if (std::isfinite(sa.batch_tol)) sp.batch_tol = sa.batch_tol;
    return sp;
}

// ---- subcommands ----

int cmd_homogenize(const Globals& g, const ProfileArgs& pa) {
    auto p = build_profile(pa);
    auto fc = hsdisp::material::first_corrector(p);
    auto b = hsdisp::material::conductivity_bounds(p);
    std::string body;
    if (g.emit == "csv") {
        FlatRecord rec;
        rec.add("m", fc.m);
        rec.add("b1t", fc.b1t);
        rec.add("b2t", fc.b2t);
        rec.add("ct", fc.ct);
        rec.add("bounds_harmonic", b.harmonic);
        rec.add("bounds_assemblage", b.assemblage);
        rec.add("bounds_arithmetic", b.arithmetic);
        body = rec.to_csv();
    } else {
        body = "{\n";
        body += "  \"m\": " + num17(fc.m) + ",\n";
        body += "  \"b1t\": " + num17(fc.b1t) + ",\n";
        body += "  \"b2t\": " + num17(fc.b2t) + ",\n";
        body += "  \"ct\": " + num17(fc.ct) + ",\n";
        body += "  \"bounds\": {\"harmonic\": " + num17(b.harmonic) +
                ", \"assemblage\": " + num17(b.assemblage) +
                ", \"arithmetic\": " + num17(b.arithmetic) + "}\n";
        body += "}\n";
    }
    deliver(body, g.out);
    return 0;
}

int cmd_corrector(const Globals& g, const ProfileArgs& pa, const std::string& variant) {
    auto p = build_profile(pa);
    auto fc = hsdisp::material::first_corrector(p);
    FlatRecord rec;
    rec.add_str("variant", variant);
    if (variant == "regular") {
        auto rc = hsdisp::corrector::regular_second_corrector(p, fc);
        rec.add("b1", rc.b1);
        rec.add("q1", rc.q1);
        rec.add("t1", rc.t1);
        rec.add("b2", rc.b2);
        rec.add("c2", rc.c2);
        rec.add("d2", rc.d2);
        rec.add("p2", rc.p2);
        rec.add("q2", rc.q2);
        rec.add("t2", rc.t2);
        rec.add("s2", rc.s2);
        rec.add("g_prime_1", hsdisp::corrector::eval_g_prime(rc, p, 1.0));
        rec.add("h_prime_1", hsdisp::corrector::eval_h_prime(rc, p, 1.0));
    } else if (variant == "pinned") {
        auto sc = hsdisp::corrector::solve_closed_form(p, fc);
        auto cr = hsdisp::corrector::verify_consistency(sc, p, fc);
        auto nr = hsdisp::corrector::neumann_residual(sc, fc, p.dim);
        rec.add("b1", sc.b1);
        rec.add("c1", sc.c1);
        rec.add("d1", sc.d1);
        rec.add("p1", sc.p1);
        rec.add("q1", sc.q1);
        rec.add("t1", sc.t1);
        rec.add("b2", sc.b2);
        rec.add("c2", sc.c2);
        rec.add("d2", sc.d2);
        rec.add("p2", sc.p2);
        rec.add("q2", sc.q2);
        rec.add("t2", sc.t2);
        rec.add("max_row_residual", cr.max_row_residual);
        rec.add_uint("rank", std::size_t(cr.rank));
        rec.add_uint("rank_augmented", std::size_t(cr.rank_augmented));
        rec.add("neumann_outer_d", nr.first);
        rec.add("neumann_outer_p", nr.second);
        rec.add("g_prime_1", hsdisp::corrector::eval_g_prime(sc, p, 1.0));
        rec.add("h_prime_1", hsdisp::corrector::eval_h_prime(sc, p, 1.0));
    } else {
        throw degenerate_input("variant must be 'pinned' or 'regular'");
    }
    deliver(rec.render(g.emit), g.out);
    return 0;
}

struct BudgetArgs {
    std::size_t max_balls = 0;
    double min_radius = 0.0;
    double target_coverage = 0.0;
};

int cmd_dispersion(const Globals& g, const ProfileArgs& pa, const std::string& packing_file,
                   const BudgetArgs& ba, const SearchArgs& sa) {
    auto p = build_profile(pa);
    const bool want_apollonian =
        ba.max_balls > 0 || ba.min_radius > 0.0 || ba.target_coverage > 0.0;
    if (packing_file.empty() && !want_apollonian)
        throw degenerate_input("dispersion needs --packing-file or an --apollonian budget");
    if (!packing_file.empty() && want_apollonian)
        throw degenerate_input("--packing-file and --apollonian budgets are mutually exclusive");

    std::vector<double> radii;
    if (!packing_file.empty()) {
        auto pk = hsdisp::packing::load_packing(packing_file);
        if (pk.dim != p.dim)
            throw degenerate_input("packing dimension " + std::to_string(pk.dim) +
                                   " does not match --dim " + std::to_string(p.dim));
        for (const auto& b : pk.balls) radii.push_back(b.radius);
    } else {
        auto pk = hsdisp::packing::greedy_apollonian(
            p.dim, {ba.max_balls, ba.min_radius, ba.target_coverage}, build_search(sa, g.threads));
        for (const auto& b : pk.balls) radii.push_back(b.radius);
    }

    auto den = hsdisp::dispersion::ball_dispersion_density(hsdisp::material::first_corrector(p), p);
    auto res = hsdisp::dispersion::dispersion_phs(den, radii, p.dim);
    FlatRecord rec;
    rec.add("d_phs", res.d_phs);
    rec.add("sum_radii_N2", res.sum_radii_N2);
    rec.add("cell_volume", res.cell_volume);
    rec.add("j_value", res.density.j_value);
    rec.add("quad_error", res.density.quad_error);
    rec.add_uint("balls", radii.size());
    deliver(rec.render(g.emit), g.out);
    return 0;
}

int cmd_pack(const Globals& g, int dim, const BudgetArgs& ba, const SearchArgs& sa) {
    require_set("--dim", dim != 0);
    auto pk = hsdisp::packing::greedy_apollonian(
        dim, {ba.max_balls, ba.min_radius, ba.target_coverage}, build_search(sa, g.threads));
    std::string body;
    if (g.emit == "csv") {
        for (int k = 0; k < dim; ++k) body += (k ? "," : "") + ("center_" + std::to_string(k));
        body += ",radius\n";
        for (const auto& b : pk.balls) {
            for (int k = 0; k < dim; ++k)
                body += (k ? "," : "") + format_double17(b.center[std::size_t(k)]);
            body += "," + format_double17(b.radius) + "\n";
        }
    } else {
        body = hsdisp::packing::packing_json(pk);
    }
    deliver(body, g.out);
    return 0;
}

int cmd_minimize(const Globals& g, int dim, const BudgetArgs& ba, const SearchArgs& sa,
                 const std::string& radii_out) {
    require_set("--dim", dim != 0);
    auto res = hsdisp::minimizer::minimize_via_apollonian(
        dim, {ba.max_balls, ba.min_radius, ba.target_coverage}, build_search(sa, g.threads));
    if (!radii_out.empty()) hsdisp::packing::save_packing(res.structure, radii_out);
    FlatRecord rec;
    rec.add("i_lower", res.i_lower);
    rec.add("i_upper", res.i_upper);
    rec.add("coverage", res.coverage);
    rec.add("deficit", res.deficit);
    rec.add_str("radii_file", radii_out);
    deliver(rec.render(g.emit), g.out);
    return 0;
}

int cmd_validate(const Globals& g, const std::string& suite) {
    if (suite != "all") throw degenerate_input("unknown validation suite '" + suite + "'");
    auto rep = hsdisp::validate::run_validation(g.seed, g.threads);
    std::string body;
    if (g.emit == "csv") {
        body = "kind,name,value,reference,error,tolerance,pass,note\n";
        for (const auto& c : rep.checks)
            body += "check," + csv_field(c.name) + "," + num17(c.value) + "," +
                    num17(c.reference) + "," + num17(c.error) + "," + num17(c.tolerance) + "," +
                    (c.pass ? "true" : "false") + "," + csv_field(c.note) + "\n";
        for (const auto& o : rep.observations)
            body += "observation," + csv_field(o.name) + "," + num17(o.value) + ",,,,," +
                    csv_field(o.note) + "\n";
    } else {
        body = hsdisp::validate::report_json(rep);
    }
    deliver(body, g.out);
    return rep.all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coated-ball composites: homogenized conductivity, dispersive corrections, "
                 "and torus ball packings"};
    app.require_subcommand(1);

    Globals g;
    std::string config_path;
    Registry global_reg;
    app.add_option("--config", config_path, "JSON file with defaults for any flag")
        ->envname("HSDISP_CONFIG");
    reg(global_reg, &app, "out", g.out, "write the result here instead of stdout");
    reg(global_reg, &app, "emit", g.emit, "output format: json or csv");
    reg(global_reg, &app, "seed", g.seed, "seed for randomized validation draws");
    reg(global_reg, &app, "threads", g.threads, "worker threads (never changes results)");

    std::map<CLI::App*, Registry> regs;
    std::map<CLI::App*, std::function<int()>> runners;
    auto sub = [&](const char* name, const char* desc) {
        CLI::App* c = app.add_subcommand(name, desc);
        c->fallthrough();
        return c;
    };

    ProfileArgs hom_p;
    {
        auto* c = sub("homogenize", "equivalent conductivity and first-corrector coefficients");
        reg_profile(regs[c], c, hom_p);
        runners[c] = [&] { return cmd_homogenize(g, hom_p); };
    }

    ProfileArgs cor_p;
    std::string cor_variant = "pinned";
    {
        auto* c = sub("corrector", "second-corrector coefficients and consistency report");
        reg_profile(regs[c], c, cor_p);
        reg(regs[c], c, "variant", cor_variant, "pinned or regular");
        runners[c] = [&] { return cmd_corrector(g, cor_p, cor_variant); };
    }

    ProfileArgs dis_p;
    std::string dis_file;
    BudgetArgs dis_b;
    SearchArgs dis_s;
    {
        auto* c = sub("dispersion", "dispersion coefficient of a ball structure");
        reg_profile(regs[c], c, dis_p);
        reg(regs[c], c, "packing-file", dis_file, "packing JSON produced by `pack`");
        reg(regs[c], c, "apollonian", dis_b.max_balls, "greedy construction budget (balls)");
        reg(regs[c], c, "min-radius", dis_b.min_radius, "greedy stop: smallest admissible radius");
        reg(regs[c], c, "target-coverage", dis_b.target_coverage,
            "greedy stop: covered volume fraction");
        reg_search(regs[c], c, dis_s);
        runners[c] = [&] { return cmd_dispersion(g, dis_p, dis_file, dis_b, dis_s); };
    }

    int pack_dim = 0;
    BudgetArgs pack_b;
    SearchArgs pack_s;
    {
        auto* c = sub("pack", "greedy ball packing of the unit torus");
        reg(regs[c], c, "dim", pack_dim, "torus dimension");
        reg(regs[c], c, "max-balls", pack_b.max_balls,
            "stop once at least this many balls are placed (tie batches are never split)");
        reg(regs[c], c, "min-radius", pack_b.min_radius, "stop below this radius");
        reg(regs[c], c, "target-coverage", pack_b.target_coverage,
            "stop at this covered volume fraction");
        reg_search(regs[c], c, pack_s);
        runners[c] = [&] { return cmd_pack(g, pack_dim, pack_b, pack_s); };
    }

    int min_dim = 0;
    BudgetArgs min_b;
    SearchArgs min_s;
    std::string min_radii_out;
    {
        auto* c = sub("minimize", "dispersion-functional bracket via the greedy packing");
        reg(regs[c], c, "dim", min_dim, "space dimension");
        reg(regs[c], c, "budget", min_b.max_balls,
            "construction budget: stop once at least this many balls are placed");
        reg(regs[c], c, "min-radius", min_b.min_radius, "stop below this radius");
        reg(regs[c], c, "target-coverage", min_b.target_coverage,
            "stop at this covered volume fraction");
        reg(regs[c], c, "radii-out", min_radii_out, "also write the packing JSON here");
        reg_search(regs[c], c, min_s);
        runners[c] = [&] { return cmd_minimize(g, min_dim, min_b, min_s, min_radii_out); };
    }

    std::string val_suite = "all";
    {
        auto* c = sub("validate", "cross-module agreement suite; exit 3 when a gate fails");
        reg(regs[c], c, "suite", val_suite, "check selection (only 'all')");
        runners[c] = [&] { return cmd_validate(g, val_suite); };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        if (!config_path.empty()) apply_config(config_path, global_reg, regs[active]);
        if (g.emit != "json" && g.emit != "csv")
            throw degenerate_input("emit must be 'json' or 'csv'");
        if (g.threads < 1) throw degenerate_input("threads must be >= 1");
        return runners[active]();
    } catch (const degenerate_input& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const hsdisp::infeasible_radii& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const hsdisp::packing::search_budget_exceeded& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
