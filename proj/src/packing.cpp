#include "hsdisp/packing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include <json.hpp>

namespace hsdisp::packing {

namespace {

constexpr double kOverlapSlack = 1e-12;
constexpr double kCoverageSlack = 1e-9;
constexpr double kDedupeRadius = 1e-7;

double wrap01(double x) {
    double y = x - std::floor(x);
    return (y >= 1.0) ? 0.0 : y;  // rounding can land exactly on 1
}

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

int default_grid(int dim) {
    switch (dim) {
        case 1: return 4096;
        case 2: return 512;
        default: return 96;
    }
}

struct ResolvedSpec {
    int grid;
    int top_k;
    double radius_tol;
    double batch_tol;
    double floor;
    int threads;
};

ResolvedSpec resolve_spec(const SearchSpec& s, int dim) {
    if (dim < 1 || dim > 3)
        throw degenerate_input("packing search: construction supports dim 1, 2, or 3");
    ResolvedSpec r;
    r.grid = (s.grid_per_axis == 0) ? default_grid(dim) : s.grid_per_axis;
    if (r.grid < 8)
        throw degenerate_input("packing search: grid_per_axis must be >= 8");
    if (std::pow(double(r.grid), dim) > 16777216.5)
        throw degenerate_input("packing search: grid exceeds 2^24 points");
    r.top_k = s.top_k;
    if (r.top_k < 1) throw degenerate_input("packing search: top_k must be >= 1");
    r.radius_tol = s.radius_tol;
    if (!(r.radius_tol > 0.0) || r.radius_tol > 1e-3)
        throw degenerate_input("packing search: radius_tol must lie in (0, 1e-3]");
    r.batch_tol = s.batch_tol;
    if (r.batch_tol < 0.0 || r.batch_tol > 1e-3)
        throw degenerate_input("packing search: batch_tol must lie in [0, 1e-3]");
    r.floor = s.min_radius_floor;
    if (!(r.floor > 0.0) || r.floor > 0.5)
        throw degenerate_input("packing search: min_radius_floor must lie in (0, 1/2]");
    r.threads = s.threads;
    if (r.threads < 1) throw degenerate_input("packing search: threads must be >= 1");
    return r;
}

struct Candidate {
    std::vector<double> center;
    double radius = 0.0;
};

// Exact clearance field sampled on a regular grid, lowered incrementally as
// balls are inserted; grid argmaxima seed the pattern-search polish.
class SearchEngine {
  public:
    SearchEngine(int dim, std::vector<TorusBall> balls, const SearchSpec& spec)
        : dim_(dim), rs_(resolve_spec(spec, dim)), balls_(std::move(balls)) {
        spacing_ = 1.0 / rs_.grid;
        std::size_t n = 1;
        for (int k = 0; k < dim_; ++k) n *= std::size_t(rs_.grid);
        field_.assign(n, 0.5);
        for (const auto& b : balls_) lower_field(b);
    }

    const std::vector<TorusBall>& balls() const { return balls_; }

    void insert(const TorusBall& b) {
        balls_.push_back(b);
        lower_field(b);
    }

    // Every polished maximizer within batch_tol of the incumbent radius,
    // deduplicated, snapped to the batch minimum, in lexicographic order.
    std::vector<TorusBall> query_batch() {
        const std::size_t raw_k = std::size_t(rs_.top_k) * 16;
        auto before = [](const std::pair<double, std::size_t>& a,
                         const std::pair<double, std::size_t>& b) {
            return a.first > b.first || (a.first == b.first && a.second < b.second);
        };
        std::vector<std::pair<double, std::size_t>> raw;
        raw.reserve(raw_k + 1);
        for (std::size_t idx = 0; idx < field_.size(); ++idx) {
            std::pair<double, std::size_t> e{field_[idx], idx};
            if (raw.size() == raw_k && !before(e, raw.back())) continue;
            raw.insert(std::upper_bound(raw.begin(), raw.end(), e, before), e);
            if (raw.size() > raw_k) raw.pop_back();
        }

        // keep top_k starts pairwise separated so distinct basins survive
        const double sep = 3.0 * spacing_;
        std::vector<std::vector<double>> starts;
        for (const auto& e : raw) {
            if (int(starts.size()) >= rs_.top_k) break;
            auto x = point_of(e.second);
            bool close = false;
            for (const auto& s : starts)
                if (torus_distance(s, x, dim_) < sep) {
                    close = true;
                    break;
                }
            if (!close) starts.push_back(std::move(x));
        }

        std::vector<Candidate> cand(starts.size());
        parallel_chunks(int(starts.size()), rs_.threads,
                        [&](int c) { cand[std::size_t(c)] = refine(starts[std::size_t(c)]); });
        std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
            if (a.radius != b.radius) return a.radius > b.radius;
            return lex_less(a.center, b.center);
        });
        if (cand.empty() || cand.front().radius <= rs_.floor)
            throw coverage_complete("packing search: no candidate clears the radius floor");

        std::vector<Candidate> kept;
        for (auto& c : cand) {
            bool dup = false;
            for (const auto& k : kept)
                if (torus_distance(k.center, c.center, dim_) < kDedupeRadius) {
                    dup = true;
                    break;
                }
            if (!dup) kept.push_back(std::move(c));
        }

        const double best = kept.front().radius;
        double snap = best;
        for (const auto& k : kept)
            if (k.radius >= best - rs_.batch_tol) snap = std::min(snap, k.radius);
        std::vector<TorusBall> batch;
        for (const auto& k : kept)
            if (k.radius >= best - rs_.batch_tol) batch.push_back({k.center, snap});
        std::sort(batch.begin(), batch.end(),
                  [](const TorusBall& a, const TorusBall& b) { return lex_less(a.center, b.center); });
        return batch;
    }

  private:
    std::vector<double> point_of(std::size_t idx) const {
        std::vector<double> x(static_cast<std::size_t>(dim_));
        for (int k = dim_ - 1; k >= 0; --k) {
            x[std::size_t(k)] = double(idx % std::size_t(rs_.grid)) * spacing_;
            idx /= std::size_t(rs_.grid);
        }
        return x;
    }

    // lower the field under a new ball; per-axis squared offsets make the
    // sweep one add + sqrt per point
    void lower_field(const TorusBall& b) {
        const int g = rs_.grid;
        std::vector<double> ax(std::size_t(dim_) * std::size_t(g));
        for (int k = 0; k < dim_; ++k)
            for (int i = 0; i < g; ++i) {
                double u = std::fabs(i * spacing_ - b.center[std::size_t(k)]);
                if (u > 0.5) u = 1.0 - u;
                ax[std::size_t(k) * std::size_t(g) + std::size_t(i)] = u * u;
            }
        const double r = b.radius;
        double* f = field_.data();
        if (dim_ == 1) {
            for (int i = 0; i < g; ++i) {
                double v = std::sqrt(ax[std::size_t(i)]) - r;
                if (v < f[i]) f[i] = v;
            }
        } else if (dim_ == 2) {
            const double* a0 = ax.data();
            const double* a1 = ax.data() + g;
            std::size_t idx = 0;
            for (int i = 0; i < g; ++i) {
                const double d0 = a0[i];
                for (int j = 0; j < g; ++j, ++idx) {
                    double v = std::sqrt(d0 + a1[j]) - r;
                    if (v < f[idx]) f[idx] = v;
                }
            }
        } else {
            const double* a0 = ax.data();
            const double* a1 = ax.data() + g;
            const double* a2 = ax.data() + 2 * std::size_t(g);
            std::size_t idx = 0;
            for (int i = 0; i < g; ++i)
                for (int j = 0; j < g; ++j) {
                    const double d01 = a0[i] + a1[j];
                    for (int k = 0; k < g; ++k, ++idx) {
                        double v = std::sqrt(d01 + a2[k]) - r;
                        if (v < f[idx]) f[idx] = v;
                    }
                }
        }
    }

    double clear_all(const std::vector<double>& x) const {
        double best = 0.5;
        for (const auto& b : balls_)
            best = std::min(best, torus_distance(x, b.center, dim_) - b.radius);
        return best;
    }

    double clear_local(const std::vector<double>& x,
                       const std::vector<const TorusBall*>& local) const {
        double best = 0.5;
        for (const auto* b : local)
            best = std::min(best, torus_distance(x, b->center, dim_) - b->radius);
        return best;
    }

    // Compass search over the Moore neighborhood with halving steps.  The
    // clearance cone is 1-Lipschitz, so a ball list with margin 8 spacings
    // stays exact for every probe until the drift guard rebuilds it.
    Candidate refine(const std::vector<double>& start) const {
        std::vector<double> pos = start;
        std::vector<double> anchor;
        std::vector<const TorusBall*> local;
        auto rebuild = [&]() {
            anchor = pos;
            double v0 = clear_all(pos);
            double margin = v0 + 8.0 * spacing_;
            local.clear();
            for (const auto& b : balls_)
                if (torus_distance(pos, b.center, dim_) - b.radius <= margin)
                    local.push_back(&b);
            return v0;
        };
        double val = rebuild();

        std::vector<std::vector<int>> offs;
        {
            int total = 1;
            for (int k = 0; k < dim_; ++k) total *= 3;
            for (int t = 0; t < total; ++t) {
                std::vector<int> o(static_cast<std::size_t>(dim_));
                int u = t;
                bool zero = true;
                for (int k = dim_ - 1; k >= 0; --k) {
                    o[std::size_t(k)] = u % 3 - 1;
                    u /= 3;
                    zero = zero && o[std::size_t(k)] == 0;
                }
                if (!zero) offs.push_back(std::move(o));
            }
        }

        double step = spacing_;
        std::vector<double> probe(static_cast<std::size_t>(dim_));
        std::vector<double> bestp(static_cast<std::size_t>(dim_));
        long guard = 200000;
        while (step >= rs_.radius_tol && guard-- > 0) {
            double bestv = val;
            bool moved = false;
            for (const auto& o : offs) {
                for (int k = 0; k < dim_; ++k)
                    probe[std::size_t(k)] = wrap01(pos[std::size_t(k)] + step * o[std::size_t(k)]);
                double v = clear_local(probe, local);
                if (v > bestv) {
                    bestv = v;
                    bestp = probe;
                    moved = true;
                }
            }
            if (moved) {
                pos = bestp;
                val = bestv;
                if (torus_distance(pos, anchor, dim_) > 3.0 * spacing_) val = rebuild();
            } else {
                step *= 0.5;
            }
        }

        Candidate c;
        c.center = pos;
        c.radius = clear_all(pos);
        return c;
    }

    int dim_;
    ResolvedSpec rs_;
    double spacing_;
    std::vector<TorusBall> balls_;
    std::vector<double> field_;
};

void check_centers(const BallPacking& p) {
    if (p.dim < 1) throw degenerate_input("packing search: dim must be >= 1");
    for (const auto& b : p.balls)
        if (int(b.center.size()) != p.dim)
            throw degenerate_input("packing search: ball center dimension mismatch");
}

void sort_balls(std::vector<TorusBall>& balls) {
    std::sort(balls.begin(), balls.end(), [](const TorusBall& a, const TorusBall& b) {
        if (a.radius != b.radius) return a.radius > b.radius;
        return lex_less(a.center, b.center);
    });
}

}  // namespace

double torus_distance(const std::vector<double>& a, const std::vector<double>& b, int dim) {
    if (dim < 1) throw degenerate_input("torus_distance: dim must be >= 1");
    if (int(a.size()) != dim || int(b.size()) != dim)
        throw degenerate_input("torus_distance: point dimension mismatch");
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double u = std::fabs(a[std::size_t(k)] - b[std::size_t(k)]);
        if (u > 0.5) u = 1.0 - u;
        s += u * u;
    }
    return std::sqrt(s);
}

double clearance(const BallPacking& p, const std::vector<double>& x) {
    check_centers(p);
    double best = 0.5;
    for (const auto& b : p.balls)
        best = std::min(best, torus_distance(x, b.center, p.dim) - b.radius);
    return best;
}

std::vector<TorusBall> maximal_empty_balls(const BallPacking& p, const SearchSpec& spec) {
    check_centers(p);
    SearchEngine eng(p.dim, p.balls, spec);
    return eng.query_batch();
}

TorusBall largest_empty_ball(const BallPacking& p, const SearchSpec& spec) {
    return maximal_empty_balls(p, spec).front();
}

BallPacking greedy_apollonian(int dim, const StopRule& stop, const SearchSpec& spec) {
    if (stop.max_balls == 0 && stop.min_radius <= 0.0 && stop.target_coverage <= 0.0)
        throw degenerate_input(
            "greedy_apollonian: stop rule must set max_balls, min_radius, or target_coverage");
    if (stop.min_radius < 0.0 || stop.min_radius > 0.5)
        throw degenerate_input("greedy_apollonian: min_radius must lie in (0, 1/2]");
    if (stop.target_coverage < 0.0 || stop.target_coverage > 1.0)
        throw degenerate_input("greedy_apollonian: target_coverage must lie in (0, 1]");

    // a min_radius stop IS the search floor: reaching it is a satisfied stop
    SearchSpec eff = spec;
    if (stop.min_radius > 0.0) eff.min_radius_floor = stop.min_radius;

    SearchEngine eng(dim, {}, eff);
    for (;;) {
        if (stop.max_balls > 0 && eng.balls().size() >= stop.max_balls) break;
        BallPacking snap{dim, eng.balls(), "apollonian"};
        double cov = coverage(snap).volume_fraction;
        if (cov >= 1.0 - kCoverageSlack) break;  // nothing measurable left to insert
        if (stop.target_coverage > 0.0 && cov >= stop.target_coverage) break;

        std::vector<TorusBall> batch;
        try {
            batch = eng.query_batch();
        } catch (const coverage_complete&) {
            if (stop.min_radius > 0.0) break;
            BallPacking partial{dim, eng.balls(), "apollonian"};
            sort_balls(partial.balls);
            throw search_budget_exceeded(std::move(partial));
        }
        // batches are atomic; members that collide with an earlier batch-mate
        // are dropped (the bare torus collapses to a single ball this way)
        for (const auto& nb : batch) {
            bool overlaps = false;
            for (const auto& ob : eng.balls())
                if (torus_distance(nb.center, ob.center, dim) <
                    nb.radius + ob.radius - kOverlapSlack) {
                    overlaps = true;
                    break;
                }
            if (!overlaps) eng.insert(nb);
        }
    }

    BallPacking out{dim, eng.balls(), "apollonian"};
    sort_balls(out.balls);
    validate_packing(out);
    return out;
}

CoverageReport coverage(const BallPacking& p) {
    CoverageReport r{0.0, 0.0, 0.0};
    if (p.balls.empty()) return r;
    if (p.dim < 1) throw degenerate_input("coverage: dim must be >= 1");
    const double omega = unit_ball_volume(p.dim);
    kahan_sum vol;
    kahan_sum pow_sum;
    for (const auto& b : p.balls) {
        const double en = std::pow(b.radius, p.dim);
        pow_sum.add(en);
        vol.add(omega * en);
    }
    r.volume_fraction = vol.value();
    r.radius_power_sum = pow_sum.value();
    r.ratio_to_dimension_constant = pow_sum.value() * omega;
    return r;
}

void validate_packing(const BallPacking& p) {
    if (p.dim < 1) throw degenerate_input("validate_packing: dim must be >= 1");
    const auto& bs = p.balls;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        const auto& b = bs[i];
        if (int(b.center.size()) != p.dim)
            throw infeasible_radii("validate_packing: ball " + std::to_string(i) +
                                   " center dimension mismatch");
        for (int k = 0; k < p.dim; ++k) {
            const double c = b.center[std::size_t(k)];
            if (!std::isfinite(c) || c < 0.0 || c >= 1.0)
                throw infeasible_radii("validate_packing: ball " + std::to_string(i) +
                                       " center is not canonical in [0,1)");
        }
        if (!std::isfinite(b.radius) || b.radius <= 0.0 || b.radius > 0.5)
            throw infeasible_radii("validate_packing: ball " + std::to_string(i) +
                                   " radius lies outside (0, 1/2]");
        if (i > 0 && b.radius > bs[i - 1].radius)
            throw infeasible_radii("validate_packing: radii increase between balls " +
                                   std::to_string(i - 1) + " and " + std::to_string(i));
    }
    for (std::size_t i = 0; i < bs.size(); ++i)
        for (std::size_t j = i + 1; j < bs.size(); ++j) {
            const double d = torus_distance(bs[i].center, bs[j].center, p.dim);
            const double need = bs[i].radius + bs[j].radius;
            if (d < need - kOverlapSlack)
                throw infeasible_radii("validate_packing: balls " + std::to_string(i) + " and " +
                                       std::to_string(j) + " overlap (distance " +
                                       format_double17(d) + " < radius sum " +
                                       format_double17(need) + ")");
        }
    const CoverageReport cov = coverage(p);
    if (cov.volume_fraction > 1.0 + kCoverageSlack)
        throw infeasible_radii("validate_packing: coverage " +
                               format_double17(cov.volume_fraction) + " exceeds the unit cell");
}

std::string packing_json(const BallPacking& p) {
    std::string out;
    out += "{\n  \"dim\": " + std::to_string(p.dim) +
           ",\n  \"generator\": " + nlohmann::json(p.generator).dump() + ",\n  \"balls\": [";
    for (std::size_t i = 0; i < p.balls.size(); ++i) {
        const auto& b = p.balls[i];
        out += (i ? ",\n" : "\n");
        out += "    {\"center\": [";
        for (int k = 0; k < p.dim; ++k)
            out += (k ? ", " : "") + format_double17(b.center[std::size_t(k)]);
        out += "], \"radius\": " + format_double17(b.radius) + "}";
    }
    out += p.balls.empty() ? "]" : "\n  ]";
    out += "\n}\n";
    return out;
}

void save_packing(const BallPacking& p, const std::string& path) {
    validate_packing(p);
    const std::string body = packing_json(p);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw numerical_failure("save_packing: cannot open " + tmp);
        f << body;
        f.flush();
        if (!f) throw numerical_failure("save_packing: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw numerical_failure("save_packing: cannot move " + tmp + " into place");
}

BallPacking load_packing(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw degenerate_input("load_packing: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw degenerate_input(std::string("load_packing: ") + e.what());
    }
    if (!j.is_object()) throw degenerate_input("load_packing: top level must be an object");
    for (const auto& item : j.items())
        if (item.key() != "dim" && item.key() != "generator" && item.key() != "balls")
            throw degenerate_input("load_packing: unknown key '" + item.key() + "'");
    if (!j.contains("dim") || !j["dim"].is_number_integer())
        throw degenerate_input("load_packing: field 'dim' must be an integer");
    if (!j.contains("generator") || !j["generator"].is_string())
        throw degenerate_input("load_packing: field 'generator' must be a string");
    if (!j.contains("balls") || !j["balls"].is_array())
        throw degenerate_input("load_packing: field 'balls' must be an array");

    BallPacking p;
    p.dim = j["dim"].get<int>();
    p.generator = j["generator"].get<std::string>();
    std::size_t i = 0;
    for (const auto& jb : j["balls"]) {
        const std::string tag = "load_packing: ball " + std::to_string(i);
        if (!jb.is_object()) throw degenerate_input(tag + " must be an object");
        for (const auto& item : jb.items())
            if (item.key() != "center" && item.key() != "radius")
                throw degenerate_input(tag + " has unknown key '" + item.key() + "'");
        if (!jb.contains("center") || !jb["center"].is_array())
            throw degenerate_input(tag + " field 'center' must be an array");
        if (!jb.contains("radius") || !jb["radius"].is_number())
            throw degenerate_input(tag + " field 'radius' must be a number");
        TorusBall b;
        for (const auto& jc : jb["center"]) {
            if (!jc.is_number()) throw degenerate_input(tag + " center entries must be numbers");
            b.center.push_back(jc.get<double>());
        }
        b.radius = jb["radius"].get<double>();
        p.balls.push_back(std::move(b));
        ++i;
    }
    validate_packing(p);
    return p;
}

}  // namespace hsdisp::packing
