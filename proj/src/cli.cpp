#include "slowlight/cli.hpp"

#include "slowlight/darkstate.hpp"
#include "slowlight/dispersion.hpp"
#include "slowlight/fockspace.hpp"
#include "slowlight/params.hpp"
#include "slowlight/propagation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef SLOWLIGHT_VERSION
#define SLOWLIGHT_VERSION "0.0.0"
#endif

namespace slowlight::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::coupling_off:
    case ErrorKind::no_absorption_data:
    case ErrorKind::missing_parameter:
    case ErrorKind::adiabatic_elimination_invalid:
    case ErrorKind::config:
        return exit_config;
    case ErrorKind::oracle_scale_only:
    case ErrorKind::branch_tracking:
    case ErrorKind::wave_breaking:
    case ErrorKind::stability:
        return exit_numerical;
    case ErrorKind::invariant_violation:
        return exit_invariant;
    }
    return exit_numerical;
}

std::uint64_t fnv1a(std::string_view text) noexcept
{
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

constexpr const char* units_note = "z um, t us, density 1/um, flux 1/us, frequency 1/us, velocity um/us";

[[noreturn]] void config_error(const std::string& what)
{
    throw Error(ErrorKind::config, what);
}

// Schema helpers -----------------------------------------------------------

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        config_error("'" + where + "' must be an object");
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known)
            config_error("unknown key '" + item.key() + "' in '" + where + "'");
    }
}

double get_number(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key))
        config_error("'" + where + "." + key + "' is required");
    const auto& v = obj.at(key);
    if (!v.is_number())
        config_error("'" + where + "." + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const char* key, const std::string& where, double fallback)
{
    return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

long long get_int(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key))
        config_error("'" + where + "." + key + "' is required");
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        config_error("'" + where + "." + key + "' must be an integer");
    return v.get<long long>();
}

long long get_int_or(const json& obj, const char* key, const std::string& where, long long fallback)
{
    return obj.contains(key) ? get_int(obj, key, where) : fallback;
}

bool get_bool_or(const json& obj, const char* key, const std::string& where, bool fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj.at(key).is_boolean())
        config_error("'" + where + "." + key + "' must be true or false");
    return obj.at(key).get<bool>();
}

std::string get_string_or(const json& obj, const char* key, const std::string& where, const std::string& fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj.at(key).is_string())
        config_error("'" + where + "." + key + "' must be a string");
    return obj.at(key).get<std::string>();
}

std::vector<double> get_number_list(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key))
        config_error("'" + where + "." + key + "' is required");
    const auto& v = obj.at(key);
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array() && !v.empty()) {
        for (const auto& e : v) {
            if (!e.is_number())
                config_error("'" + where + "." + key + "' must hold numbers");
            out.push_back(e.get<double>());
        }
    } else {
        config_error("'" + where + "." + key + "' must be a number or a non-empty array");
    }
    return out;
}

std::vector<long long> get_int_list(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key))
        config_error("'" + where + "." + key + "' is required");
    const auto& v = obj.at(key);
    std::vector<long long> out;
    const auto take = [&](const json& e) {
        if (!e.is_number_integer())
            config_error("'" + where + "." + key + "' must hold integers");
        out.push_back(e.get<long long>());
    };
    if (v.is_array() && !v.empty())
        for (const auto& e : v)
            take(e);
    else if (v.is_number())
        take(v);
    else
        config_error("'" + where + "." + key + "' must be an integer or a non-empty array");
    return out;
}

// Config loading -----------------------------------------------------------

struct Config {
    json root;
    std::string text;
    std::uint64_t hash = 0;
    fs::path base_dir;
};

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Config load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        config_error("cannot read config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    Config cfg;
    cfg.text = buf.str();
    cfg.hash = fnv1a(cfg.text);
    cfg.base_dir = fs::path(path).parent_path();
    try {
        cfg.root = json::parse(cfg.text);
    } catch (const json::parse_error& e) {
        // byte points one past the offending character
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, col] = line_column(cfg.text, at);
        config_error("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                     e.what());
    }
    check_keys(cfg.root, "config",
               {"params", "dk", "vgr", "dispersion", "pulse", "solver", "fock", "meanfield", "output_dir", "seed",
                "description"});
    if (cfg.root.contains("seed") && !cfg.root.at("seed").is_number_integer())
        config_error("'seed' must be an integer");
    return cfg;
}

PhysicalParams params_from_json(const json& obj)
{
    check_keys(obj, "params",
               {"u", "kappa", "omega_c", "n_1d", "length", "delta", "gamma", "mode_area", "sigma0", "dipole"});
    PhysicalParams::Builder b;
    b.u(get_number(obj, "u", "params"))
        .omega_c(get_number(obj, "omega_c", "params"))
        .n_1d(get_number(obj, "n_1d", "params"))
        .length(get_number(obj, "length", "params"))
        .delta(get_number_or(obj, "delta", "params", 0.0))
        .gamma(get_number_or(obj, "gamma", "params", 0.0))
        .mode_area(get_number(obj, "mode_area", "params"))
        .sigma0(get_number_or(obj, "sigma0", "params", 0.0));
    if (obj.contains("kappa"))
        b.kappa(get_number(obj, "kappa", "params"));
    if (obj.contains("dipole")) {
        const auto& d = obj.at("dipole");
        check_keys(d, "params.dipole", {"d", "omega0"});
        b.dipole(get_number(d, "d", "params.dipole"), get_number(d, "omega0", "params.dipole"));
    }
    if (!obj.contains("kappa") && !obj.contains("dipole"))
        config_error("'params' needs either 'kappa' or 'dipole'");
    try {
        return b.build();
    } catch (const Error& e) {
        config_error(std::string("invalid params: ") + e.what());
    }
}

PhysicalParams require_params(const Config& cfg)
{
    if (!cfg.root.contains("params"))
        config_error("'params' block is required for this command");
    return params_from_json(cfg.root.at("params"));
}

const json& require_block(const Config& cfg, const char* name)
{
    if (!cfg.root.contains(name))
        config_error(std::string("'") + name + "' block is required for this command");
    return cfg.root.at(name);
}

// Output -------------------------------------------------------------------

struct Context {
    Config cfg;
    fs::path out_dir;
    bool strict = false;
    std::ostream* log = nullptr;
    std::vector<std::string> written;

    std::string header() const
    {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(cfg.hash));
        return std::string("slowlight ") + SLOWLIGHT_VERSION + " config_fnv1a=" + hex + " units: " + units_note;
    }

    json meta() const
    {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(cfg.hash));
        json m;
        m["tool"] = "slowlight";
        m["version"] = SLOWLIGHT_VERSION;
        m["config_fnv1a"] = hex;
        m["units"] = units_note;
        if (cfg.root.contains("seed"))
            m["seed"] = cfg.root.at("seed");
        return m;
    }

    fs::path path(const std::string& name) { return out_dir / name; }
};

class CsvWriter {
public:
    CsvWriter(Context& ctx, const std::string& name, const std::vector<std::string>& columns)
        : path_(ctx.path(name)), out_(path_, std::ios::binary)
    {
        if (!out_)
            config_error("cannot write '" + path_.string() + "'");
        out_ << "# " << ctx.header() << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
        ctx.written.push_back(path_.string());
    }

    void row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_number(values[i]);
        out_ << '\n';
    }

    void row_with_label(const std::vector<double>& values, const std::string& label)
    {
        for (const double v : values)
            out_ << format_number(v) << ',';
        out_ << label << '\n';
    }

private:
    fs::path path_;
    std::ofstream out_;
};

json number_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

void write_json(Context& ctx, const std::string& name, json body)
{
    json doc;
    doc["meta"] = ctx.meta();
    for (auto& item : body.items())
        doc[item.key()] = item.value();
    const fs::path p = ctx.path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out)
        config_error("cannot write '" + p.string() + "'");
    out << doc.dump(2) << '\n';
    ctx.written.push_back(p.string());
}

unsigned thread_cap()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SLOWLIGHT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1)
            n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

// Runs job(i) for i in [0, count) on up to thread_cap() threads. Results are
// stored by index, so output order does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t count, Job job)
{
    const unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            job(i);
        return;
    }
    std::mutex guard;
    std::size_t next = 0;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard lock(guard);
                    if (next >= count || failure)
                        return;
                    i = next++;
                }
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(guard);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

// Subcommands --------------------------------------------------------------

int cmd_dk_curve(Context& ctx)
{
    const json& blk = require_block(ctx.cfg, "dk");
    check_keys(blk, "dk", {"rho", "n_atoms", "m_max", "m_max_ratio"});
    const auto rhos = get_number_list(blk, "rho", "dk");
    const auto ns = get_int_list(blk, "n_atoms", "dk");
    const double ratio = get_number_or(blk, "m_max_ratio", "dk", 2.0);
    const bool fixed_m = blk.contains("m_max");
    const long long m_fixed = fixed_m ? get_int(blk, "m_max", "dk") : 0;
    for (const double r : rhos)
        if (!(r > 0.0) || !std::isfinite(r))
            config_error("'dk.rho' values must be > 0");
    for (const auto n : ns)
        if (n < 1)
            config_error("'dk.n_atoms' values must be >= 1");
    if (fixed_m && m_fixed < 1)
        config_error("'dk.m_max' must be >= 1");
    if (!fixed_m && !(ratio > 0.0))
        config_error("'dk.m_max_ratio' must be > 0");

    struct Job {
        double rho;
        long long n;
        std::vector<DkPoint> curve;
    };
    std::vector<Job> jobs;
    for (const double r : rhos)
        for (const auto n : ns)
            jobs.push_back(Job{r, n, {}});

    parallel_for(jobs.size(), [&](std::size_t i) {
        Job& j = jobs[i];
        const long long m_max = fixed_m ? m_fixed : std::max<long long>(1, std::llround(ratio * j.n) + 1);
        // c = Omega_C^2 L / kappa^2 = rho N
        j.curve = dk_curve(j.n, j.rho * static_cast<double>(j.n), m_max);
    });

    json curves = json::array();
    for (const Job& j : jobs) {
        const std::string name = "dk_rho" + format_number(j.rho) + "_N" + std::to_string(j.n) + ".csv";
        CsvWriter csv(ctx, name, {"m_ratio", "Y_exact", "K_approx", "D_K"});
        double best = -1.0;
        double at = 0.0;
        for (const auto& pt : j.curve) {
            csv.row({pt.m_ratio, pt.y_exact, pt.k_approx, pt.d_k});
            if (std::abs(pt.d_k) > best) {
                best = std::abs(pt.d_k);
                at = pt.m_ratio;
            }
        }
        json c;
        c["rho"] = j.rho;
        c["n_atoms"] = j.n;
        c["m_max"] = j.curve.size();
        c["max_abs_dk"] = best;
        c["m_ratio_at_max"] = at;
        c["n_times_max"] = best * static_cast<double>(j.n);
        c["file"] = name;
        curves.push_back(c);
    }
    json body;
    body["curves"] = curves;
    write_json(ctx, "dk_summary.json", body);
    return exit_ok;
}

// v/u depends only on x = P_S / n_1d and rho; any params with that rho do.
PhysicalParams unit_params(double rho)
{
    return PhysicalParams::Builder{}
        .u(1.0)
        .kappa(1.0)
        .omega_c(std::sqrt(rho))
        .n_1d(1.0)
        .length(1.0)
        .mode_area(1.0)
        .build();
}

int cmd_vgr_curve(Context& ctx)
{
    const json& blk = require_block(ctx.cfg, "vgr");
    check_keys(blk, "vgr", {"rho", "m_over_n_max", "points"});
    std::vector<double> rhos;
    if (blk.contains("rho"))
        rhos = get_number_list(blk, "rho", "vgr");
    else
        rhos.push_back(derived_rho(require_params(ctx.cfg)));
    const double x_max = get_number_or(blk, "m_over_n_max", "vgr", 10.0);
    const long long points = get_int_or(blk, "points", "vgr", 1001);
    if (!(x_max > 0.0) || points < 2)
        config_error("'vgr' needs m_over_n_max > 0 and points >= 2");
    for (const double r : rhos)
        if (!(r > 0.0) || !std::isfinite(r))
            config_error("'vgr.rho' values must be > 0");

    CsvWriter csv(ctx, "vgr_curve.csv", {"rho", "m_over_n", "vgr_over_u"});
    json rows = json::array();
    for (const double r : rhos) {
        const PhysicalParams p = unit_params(r);
        for (long long k = 0; k < points; ++k) {
            const double x = x_max * static_cast<double>(k) / static_cast<double>(points - 1);
            csv.row({r, x, vgr_quantum(x, p)});
        }
        json item;
        item["rho"] = r;
        item["vgr_over_u_at_zero"] = vgr_quantum(0.0, p);
        item["half_speed_m_over_n"] = 1.0 - r;
        rows.push_back(item);
    }
    json body;
    body["curves"] = rows;
    write_json(ctx, "vgr_summary.json", body);
    return exit_ok;
}

int cmd_dispersion(Context& ctx)
{
    const PhysicalParams p = require_params(ctx.cfg);
    const json& blk = require_block(ctx.cfg, "dispersion");
    check_keys(blk, "dispersion", {"dk_min", "dk_max", "points", "classify", "velocity_ratio", "photon_overlap"});
    const double lo = get_number(blk, "dk_min", "dispersion");
    const double hi = get_number(blk, "dk_max", "dispersion");
    const long long points = get_int_or(blk, "points", "dispersion", 401);
    if (!(hi > lo) || points < 2)
        config_error("'dispersion' needs dk_max > dk_min and points >= 2");

    std::vector<double> grid(static_cast<std::size_t>(points));
    for (long long k = 0; k < points; ++k)
        grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);

    const DispersionBranch br = dispersion_curve(grid, p);
    const bool with_theta = !br.theta.empty();
    std::vector<std::string> cols{"dk", "omega_dark", "omega_mid", "omega_upper"};
    if (with_theta)
        cols.push_back("theta");
    CsvWriter csv(ctx, "dispersion.csv", cols);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double a = br.omega[static_cast<int>(BranchLabel::bright)][k];
        double b = br.omega[static_cast<int>(BranchLabel::excited_like)][k];
        if (a > b)
            std::swap(a, b);
        std::vector<double> row{grid[k], br.omega[static_cast<int>(BranchLabel::dark)][k], a, b};
        if (with_theta)
            row.push_back(br.theta[k]);
        csv.row(row);
    }

    json body;
    body["vgr_at_zero"] = dark_branch_group_velocity(p);
    body["vgr_weak_formula"] = p.u() * derived_rho(p) / (1.0 + derived_rho(p));
    if (p.delta() != 0.0)
        body["window_far_detuned"] = spectral_window(p, WindowRegime::far_detuned);
    if (p.gamma() > 0.0 && p.sigma0() > 0.0 && optical_density(p) > 1.0)
        body["window_dense"] = spectral_window(p, WindowRegime::dense);
    // reported only; no derivation behind it
    body["moderate_detuning_bound"] = std::hypot(p.collective_coupling(), p.omega_c());

    const bool classify = get_bool_or(blk, "classify", "dispersion", p.delta() != 0.0);
    if (classify) {
        ClassifierThresholds th;
        th.velocity_ratio = get_number_or(blk, "velocity_ratio", "dispersion", th.velocity_ratio);
        th.photon_overlap = get_number_or(blk, "photon_overlap", "dispersion", th.photon_overlap);
        std::vector<double> domega(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            domega[k] = p.u() * grid[k];
        const auto cls = dark_branch_classifier(domega, p, th);
        CsvWriter ccsv(ctx, "dispersion_classes.csv", {"domega", "velocity_ratio", "photon_overlap", "class"});
        std::map<std::string, int> counts;
        for (const auto& c : cls) {
            ccsv.row_with_label({c.domega, c.velocity_ratio, c.photon_overlap}, to_string(c.cls));
            ++counts[to_string(c.cls)];
        }
        body["classes"] = counts;
        body["thresholds"] = {{"velocity_ratio", th.velocity_ratio}, {"photon_overlap", th.photon_overlap}};
    }
    write_json(ctx, "dispersion.json", body);
    return exit_ok;
}

int cmd_fock_verify(Context& ctx)
{
    json blk = json::object();
    if (ctx.cfg.root.contains("fock"))
        blk = ctx.cfg.root.at("fock");
    check_keys(blk, "fock", {"n_max", "m_max", "xi", "delta", "tolerance"});
    const long long n_max = get_int_or(blk, "n_max", "fock", 8);
    const long long m_max = get_int_or(blk, "m_max", "fock", 8);
    const std::vector<double> xis = blk.contains("xi") ? get_number_list(blk, "xi", "fock")
                                                       : std::vector<double>{0.1, 1.0, 10.0};
    const double delta = get_number_or(blk, "delta", "fock", 0.7);
    const double tol = get_number_or(blk, "tolerance", "fock", 1e-12);
    if (n_max < 1 || m_max < 1 || n_max > 64 || m_max > 64)
        config_error("'fock.n_max' and 'fock.m_max' must lie in [1, 64]");
    for (const double xi : xis)
        if (!(xi > 0.0))
            config_error("'fock.xi' values must be > 0");

    json sectors = json::array();
    json commutators = json::array();
    double worst = 0.0;
    for (const double xi : xis) {
        const PhysicalParams p = params_for_xi(xi, delta);
        for (long long n = 1; n <= n_max; ++n)
            for (long long m = 0; m <= m_max; ++m) {
                const FockSector s = build_dark_state(n, m, xi);
                const DarkResidual r = dark_condition_residual(s, p);
                const double h_res = zero_energy_check(n, m, xi, p);
                json item;
                item["sector"] = {{"N", n}, {"M_D", m}, {"xi", xi}};
                item["r_e"] = r.r_e;
                item["r_ds"] = r.r_ds;
                worst = std::max({worst, r.r_e, r.r_ds, h_res});
                if (m >= 1) {
                    const A0Action a = a0_action_ratio(n, m, xi);
                    const double err = std::abs(a.ratio - y_exact(n, m, 1.0 / xi));
                    item["a0_ratio_error"] = err;
                    item["a0_orthogonal_residual"] = a.orthogonal_residual;
                    worst = std::max({worst, err, a.orthogonal_residual});
                } else {
                    item["a0_ratio_error"] = nullptr;
                }
                item["h_residual"] = h_res;
                sectors.push_back(item);
            }
        const ConservationNorms c = conservation_check(static_cast<int>(n_max), static_cast<int>(m_max), p);
        commutators.push_back({{"xi", xi},
                               {"commutator_n", c.commutator_n},
                               {"commutator_m", c.commutator_m},
                               {"dimension", c.dimension}});
        worst = std::max({worst, c.commutator_n, c.commutator_m});
    }
    const bool passed = worst < tol;
    json body;
    body["tolerance"] = tol;
    body["max_residual"] = worst;
    body["passed"] = passed;
    body["sectors"] = sectors;
    body["commutators"] = commutators;
    write_json(ctx, "fock_report.json", body);
    if (!passed) {
        *ctx.log << "fock-verify: max residual " << format_number(worst) << " exceeds " << format_number(tol) << '\n';
        return exit_invariant;
    }
    return exit_ok;
}

struct PulseSpec {
    std::string name;
    double peak_density = 0.0;
    double width_us = 0.0;
    double center_us = 0.0;
    double center_um = 0.0;
    double width_um = 0.0;
    double m_mean = std::numeric_limits<double>::infinity();
    bool fock = false;
    std::string profile_path;
};

PulseSpec pulse_from_json(const json& obj, const std::string& where, const std::string& default_name)
{
    check_keys(obj, where,
               {"name", "shape", "peak_density", "width_us", "center_us", "center_um", "width_um", "m_mean",
                "entrance_power_profile"});
    PulseSpec s;
    s.name = get_string_or(obj, "name", where, default_name);
    if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos)
        config_error("'" + where + ".name' must be a plain file stem");
    const std::string shape = get_string_or(obj, "shape", where, "gaussian");
    if (shape != "gaussian")
        config_error("'" + where + ".shape' must be \"gaussian\"");
    s.profile_path = get_string_or(obj, "entrance_power_profile", where, "");
    if (s.profile_path.empty())
        s.peak_density = get_number(obj, "peak_density", where);
    s.width_us = get_number_or(obj, "width_us", where, 0.0);
    s.center_us = get_number_or(obj, "center_us", where, 0.0);
    s.center_um = get_number_or(obj, "center_um", where, 0.0);
    s.width_um = get_number_or(obj, "width_um", where, 0.0);
    if (obj.contains("m_mean")) {
        const auto& v = obj.at("m_mean");
        if (v.is_string() && v.get<std::string>() == "classical") {
        } else if (v.is_number() && v.get<double>() > 0.0) {
            s.m_mean = v.get<double>();
            s.fock = true;
        } else {
            config_error("'" + where + ".m_mean' must be \"classical\" or a number > 0");
        }
    }
    return s;
}

std::vector<std::pair<double, double>> read_profile(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        config_error("cannot read entrance_power_profile '" + path.string() + "'");
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            config_error("entrance_power_profile rows need 't,flux'");
        double a = 0.0, b = 0.0;
        const char* s = line.data();
        const auto r1 = std::from_chars(s, s + comma, a);
        const auto r2 = std::from_chars(s + comma + 1, s + line.size(), b);
        if (r1.ec != std::errc{} || r2.ec != std::errc{}) {
            if (rows.empty())
                continue;  // header row
            config_error("bad number in entrance_power_profile: '" + line + "'");
        }
        rows.emplace_back(a, b);
    }
    if (rows.size() < 2)
        config_error("entrance_power_profile needs at least two rows");
    return rows;
}

double interpolate(const std::vector<std::pair<double, double>>& rows, double t)
{
    if (t <= rows.front().first || t >= rows.back().first)
        return 0.0;
    const auto it = std::upper_bound(rows.begin(), rows.end(), t,
                                     [](double v, const auto& r) { return v < r.first; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.second + (b.second - a.second) * (t - a.first) / (b.first - a.first);
}

int cmd_propagate(Context& ctx)
{
    const PhysicalParams p = require_params(ctx.cfg);
    const json& solver = require_block(ctx.cfg, "solver");
    check_keys(solver, "solver",
               {"mode", "nz", "nt", "t_final_us", "output_every_us", "boundaries", "diffusion_velocity", "courant",
                "strict"});
    const std::string mode = get_string_or(solver, "mode", "solver", "absorbing");
    const std::string boundaries = get_string_or(solver, "boundaries", "solver", "open");
    const std::string dvel = get_string_or(solver, "diffusion_velocity", "solver", "local");
    const long long nz = get_int_or(solver, "nz", "solver", 4096);
    const long long nt = get_int_or(solver, "nt", "solver", nz);
    const double t_final = get_number(solver, "t_final_us", "solver");
    const double every = get_number_or(solver, "output_every_us", "solver", 0.0);
    const double courant = get_number_or(solver, "courant", "solver", 0.9);
    const bool strict = ctx.strict || get_bool_or(solver, "strict", "solver", false);

    if (mode != "lossless" && mode != "absorbing" && mode != "meanfield")
        config_error("'solver.mode' must be lossless, absorbing or meanfield");
    if (mode == "meanfield")
        config_error("'solver.mode' meanfield is served by the meanfield-compare command");
    if (boundaries != "open" && boundaries != "periodic")
        config_error("'solver.boundaries' must be open or periodic");
    if (dvel != "local" && dvel != "weak")
        config_error("'solver.diffusion_velocity' must be local or weak");
    if (nz < 16 || nt < 16)
        config_error("'solver.nz' and 'solver.nt' must be >= 16");
    if (!(t_final > 0.0) || every < 0.0)
        config_error("'solver' needs t_final_us > 0 and output_every_us >= 0");
    const bool absorbing = mode == "absorbing";
    if (absorbing && !(p.gamma() > 0.0 && p.sigma0() > 0.0))
        config_error("absorbing mode needs params.gamma > 0 and params.sigma0 > 0");

    const json& pulse_blk = require_block(ctx.cfg, "pulse");
    std::vector<PulseSpec> pulses;
    if (pulse_blk.is_array()) {
        if (pulse_blk.empty())
            config_error("'pulse' array is empty");
        for (std::size_t i = 0; i < pulse_blk.size(); ++i)
            pulses.push_back(pulse_from_json(pulse_blk[i], "pulse[" + std::to_string(i) + "]",
                                             "pulse" + std::to_string(i)));
    } else {
        pulses.push_back(pulse_from_json(pulse_blk, "pulse", "pulse"));
    }

    std::vector<double> snap_times;
    if (every > 0.0)
        for (double ts = 0.0; ts <= t_final * (1.0 + 1e-12); ts += every)
            snap_times.push_back(ts);

    json summary = json::object();
    for (const PulseSpec& ps : pulses) {
        json item;
        if (boundaries == "open") {
            if (ps.profile_path.empty() && !(ps.width_us > 0.0))
                config_error("pulse '" + ps.name + "' needs width_us > 0");
            std::vector<double> t(static_cast<std::size_t>(nt));
            for (long long k = 0; k < nt; ++k)
                t[static_cast<std::size_t>(k)] = t_final * static_cast<double>(k) / static_cast<double>(nt - 1);
            std::vector<double> q;
            if (ps.profile_path.empty()) {
                q = gaussian_entrance_flux(t, ps.peak_density, ps.width_us, ps.center_us, ps.m_mean, p);
            } else {
                const auto rows = read_profile(ctx.cfg.base_dir / ps.profile_path);
                q.resize(t.size());
                for (std::size_t k = 0; k < t.size(); ++k)
                    q[k] = std::max(interpolate(rows, t[k]), 0.0);
            }
            TransitOptions opts;
            opts.mode = absorbing ? TransitMode::absorbing : TransitMode::lossless;
            opts.diffusion_velocity = dvel == "weak" ? DiffusionVelocity::weak : DiffusionVelocity::local;
            opts.courant = courant;
            opts.strict = strict;
            opts.snapshot_times = snap_times;
            const TransitResult r = solve_transit(t, q, ps.m_mean, p, opts);

            CsvWriter csv(ctx, ps.name + ".csv", {"t", "P_in", "P_out"});
            for (std::size_t k = 0; k < t.size(); ++k)
                csv.row({t[k], r.flux_in[k], r.flux_out[k]});
            if (!r.snapshots.empty()) {
                CsvWriter snap(ctx, ps.name + "_snapshots.csv", {"t", "z", "psi_abs2", "v_gr"});
                for (const auto& s : r.snapshots)
                    for (std::size_t j = 0; j < s.z.size(); ++j)
                        snap.row({s.t, s.z[j], s.density[j], s.vgr[j]});
            }
            item["delay_us"] = r.delay;
            item["transmitted_fraction"] = r.transmitted_fraction;
            item["break_time_us"] = r.break_time ? json(*r.break_time) : json(nullptr);
            item["break_position_um"] = r.break_position ? json(*r.break_position) : json(nullptr);
            item["fwhm_in_us"] = r.fwhm_in;
            item["fwhm_out_us"] = number_or_null(r.fwhm_out);
            item["z_steps"] = r.z_steps;
        } else {
            if (!(ps.width_um > 0.0))
                config_error("pulse '" + ps.name + "' needs width_um > 0 for periodic boundaries");
            const Grid1D grid = Grid1D::make(0.0, p.length(), static_cast<int>(nz));
            PulseState st;
            st.grid = grid;
            st.psi.resize(static_cast<std::size_t>(nz));
            for (int i = 0; i < grid.nz; ++i) {
                const double s = (grid.z(i) - ps.center_um) / ps.width_um;
                st.psi[static_cast<std::size_t>(i)] = std::exp(-0.5 * s * s);
            }
            const double raw = st.norm();
            const double scale = ps.fock ? std::sqrt(ps.m_mean / raw) : std::sqrt(ps.peak_density);
            for (auto& v : st.psi)
                v *= scale;
            st.m_mean = ps.fock ? ps.m_mean : std::numeric_limits<double>::infinity();
            const double n0 = st.norm();

            std::vector<double> tt, fin, fout;
            std::vector<PulseState> snaps;
            std::optional<double> brk;
            double n1 = n0;
            if (absorbing) {
                AdvectionDiffusionOptions o;
                o.boundary = Boundary::periodic;
                o.diffusion_velocity = dvel == "weak" ? DiffusionVelocity::weak : DiffusionVelocity::local;
                o.record_every = t_final / static_cast<double>(nt - 1);
                PulseState cur = st;
                double t_now = 0.0;
                for (const double ts : snap_times) {
                    if (ts <= t_now)
                        continue;
                    cur = solve_advection_diffusion(cur, p, ts, o).state;
                    t_now = ts;
                    snaps.push_back(cur);
                }
                const auto r = solve_advection_diffusion(st, p, t_final, o);
                tt = r.flux.t;
                fin = r.flux.entrance;
                fout = r.flux.exit;
                n1 = r.state.norm();
            } else {
                brk = analytic_break_time(st, p);
                const auto sample = [&](double ts) {
                    return solve_characteristics(st, p, std::max(ts, 1e-300), strict);
                };
                for (const double ts : snap_times)
                    if (ts > 0.0)
                        snaps.push_back(sample(ts).state);
                for (long long k = 0; k < nt; ++k) {
                    const double ts = t_final * static_cast<double>(k) / static_cast<double>(nt - 1);
                    const PulseState s = (k == 0) ? st : sample(ts).state;
                    if (k > 0 && s.t < ts)
                        break;  // past the break
                    tt.push_back(ts);
                    fin.push_back(photon_flux(s, p, grid.z0));
                    fout.push_back(photon_flux(s, p, grid.z1));
                }
                const auto last = sample(t_final);
                brk = last.break_time;
                n1 = last.state.norm();
            }
            CsvWriter csv(ctx, ps.name + ".csv", {"t", "P_in", "P_out"});
            for (std::size_t k = 0; k < tt.size(); ++k)
                csv.row({tt[k], fin[k], fout[k]});
            if (!snaps.empty()) {
                CsvWriter snap(ctx, ps.name + "_snapshots.csv", {"t", "z", "psi_abs2", "v_gr"});
                for (const auto& s : snaps)
                    for (int i = 0; i < grid.nz; ++i) {
                        const double d = std::norm(s.psi[static_cast<std::size_t>(i)]);
                        snap.row({s.t, grid.z(i), d, vgr_quantum(polariton_density(d, s.m_mean), p)});
                    }
            }
            item["delay_us"] = peak_time(tt, fout) - peak_time(tt, fin);
            item["transmitted_fraction"] = n0 > 0.0 ? n1 / n0 : 0.0;
            item["break_time_us"] = brk ? json(*brk) : json(nullptr);
            item["fwhm_in_us"] = fwhm(tt, fin);
            item["fwhm_out_us"] = fwhm(tt, fout);
        }
        item["file"] = ps.name + ".csv";
        summary[ps.name] = item;
    }
    json body;
    body["mode"] = mode;
    body["boundaries"] = boundaries;
    body["pulses"] = summary;
    write_json(ctx, "propagate_summary.json", body);
    return exit_ok;
}

int cmd_meanfield_compare(Context& ctx)
{
    const PhysicalParams p = require_params(ctx.cfg);
    const json& blk = require_block(ctx.cfg, "meanfield");
    check_keys(blk, "meanfield",
               {"nz", "length_um", "center_um", "width_um", "peak_field", "t_final_us", "speed_tolerance",
                "density_tolerance", "adiabatic_tolerance"});
    const long long nz = get_int_or(blk, "nz", "meanfield", 800);
    const double length = get_number_or(blk, "length_um", "meanfield", p.length());
    const double center = get_number(blk, "center_um", "meanfield");
    const double width = get_number(blk, "width_um", "meanfield");
    const double peak = get_number(blk, "peak_field", "meanfield");
    const double t_final = get_number(blk, "t_final_us", "meanfield");
    const double speed_tol = get_number_or(blk, "speed_tolerance", "meanfield", 0.05);
    const double dens_tol = get_number_or(blk, "density_tolerance", "meanfield", 1e-8);
    const double adia_tol = get_number_or(blk, "adiabatic_tolerance", "meanfield", 1e-3);
    if (nz < 16 || !(width > 0.0) || !(peak >= 0.0) || !(t_final > 0.0) || !(length > 0.0))
        config_error("'meanfield' needs nz >= 16, width_um > 0, peak_field >= 0, t_final_us > 0");

    const Grid1D grid = Grid1D::make(0.0, length, static_cast<int>(nz));
    std::vector<cplx> e(static_cast<std::size_t>(nz));
    for (int i = 0; i < grid.nz; ++i) {
        const double s = (grid.z(i) - center) / width;
        e[static_cast<std::size_t>(i)] = peak * std::exp(-0.5 * s * s);
    }
    const MeanFieldState init = dark_initial_state(grid, e, p);
    const MeanFieldResult full = integrate_mean_field(init, p, t_final);
    const FieldResult reduced = solve_reduced_meanfield(grid, e, p, full.state.t, ctx.strict);

    const double c0 = centroid(grid, e);
    const double shift_full = centroid(grid, full.state.e_field) - c0;
    const double shift_reduced = centroid(grid, reduced.e_field) - c0;
    const double speed_ratio = shift_full / shift_reduced;

    CsvWriter csv(ctx, "meanfield_compare.csv", {"z", "e_full_abs2", "e_reduced_abs2", "psi_e_abs2", "psi2_abs2"});
    for (int i = 0; i < grid.nz; ++i) {
        const auto k = static_cast<std::size_t>(i);
        csv.row({grid.z(i), std::norm(full.state.e_field[k]), std::norm(reduced.e_field[k]),
                 std::norm(full.state.psi_e[k]), std::norm(full.state.psi2[k])});
    }

    const auto& d = full.diagnostics;
    const bool speed_ok = std::abs(speed_ratio - 1.0) < speed_tol;
    const bool density_ok = d.max_density_drift < dens_tol;
    const bool adiabatic_ok = d.max_adiabatic_residual < adia_tol * p.n_1d();
    json body;
    body["t_final_us"] = full.state.t;
    body["centroid_shift_full_um"] = shift_full;
    body["centroid_shift_reduced_um"] = shift_reduced;
    body["speed_ratio"] = speed_ratio;
    body["max_density_drift"] = d.max_density_drift;
    body["max_adiabatic_residual"] = d.max_adiabatic_residual;
    body["max_excited_fraction"] = d.max_excited_fraction;
    body["steps"] = d.steps;
    body["substeps"] = d.substeps;
    body["reduced_break_time_us"] = reduced.break_time ? json(*reduced.break_time) : json(nullptr);
    body["passed"] = speed_ok && density_ok && adiabatic_ok;
    write_json(ctx, "meanfield_summary.json", body);
    if (!(speed_ok && density_ok && adiabatic_ok)) {
        *ctx.log << "meanfield-compare: invariant check failed (speed ratio " << format_number(speed_ratio)
                 << ", density drift " << format_number(d.max_density_drift) << ", adiabatic residual "
                 << format_number(d.max_adiabatic_residual) << ")\n";
        return exit_invariant;
    }
    return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Slow-light dark-state polariton simulator", "slowlight"};
    app.set_version_flag("--version", std::string("slowlight ") + SLOWLIGHT_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool strict = false;

    using Handler = int (*)(Context&);
    const std::vector<std::pair<std::string, Handler>> commands{
        {"dk-curve", cmd_dk_curve},
        {"vgr-curve", cmd_vgr_curve},
        {"dispersion", cmd_dispersion},
        {"fock-verify", cmd_fock_verify},
        {"propagate", cmd_propagate},
        {"meanfield-compare", cmd_meanfield_compare},
    };
    const std::map<std::string, std::string> help{
        {"dk-curve", "exact vs closed-form polariton ratio, D_K curves"},
        {"vgr-curve", "intensity-dependent group velocity curves"},
        {"dispersion", "single-excitation branches and far-detuned model"},
        {"fock-verify", "zero-mode Fock-space oracle report"},
        {"propagate", "pulse transit through the medium"},
        {"meanfield-compare", "four-field mean-field run against the reduced equation"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, handler] : commands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_flag("--strict", strict, "treat wave breaking as an error");
        subs.push_back(sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, eo;
        const int code = app.exit(e, o, eo);
        out << o.str();
        err << eo.str();
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        Context ctx;
        ctx.cfg = load_config(config_path);
        ctx.strict = strict;
        ctx.log = &err;
        if (out_dir.empty())
            out_dir = get_string_or(ctx.cfg.root, "output_dir", "config", ".");
        ctx.out_dir = out_dir;
        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec)
            config_error("cannot create output directory '" + out_dir + "': " + ec.message());

        for (std::size_t i = 0; i < commands.size(); ++i)
            if (subs[i]->parsed()) {
                const int code = commands[i].second(ctx);
                for (const auto& f : ctx.written)
                    out << "wrote " << f << '\n';
                return code;
            }
        err << "no subcommand\n";
        return exit_config;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        err << "error: config: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    }
}

} // namespace slowlight::cli
