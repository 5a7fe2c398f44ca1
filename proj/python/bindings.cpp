#include "slowlight/cli.hpp"
#include "slowlight/darkstate.hpp"
#include "slowlight/dispersion.hpp"
#include "slowlight/errors.hpp"
#include "slowlight/fockspace.hpp"
#include "slowlight/params.hpp"
#include "slowlight/propagation.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace slowlight;

namespace {

PhysicalParams make_params(double u, double kappa, double omega_c, double n_1d, double length, double mode_area,
                           double delta, double gamma, double sigma0)
{
    return PhysicalParams::Builder{}
        .u(u)
        .kappa(kappa)
        .omega_c(omega_c)
        .n_1d(n_1d)
        .length(length)
        .mode_area(mode_area)
        .delta(delta)
        .gamma(gamma)
        .sigma0(sigma0)
        .build();
}

py::dict eigenpair_dict(const Eigenpair& e)
{
    py::dict d;
    d["omega"] = e.omega;
    d["vector"] = std::vector<double>{e.vector[0], e.vector[1], e.vector[2]};
    d["label"] = to_string(e.label);
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Quantized slow-light polaritons in a 1D atomic medium";

    static py::exception<Error> exc(m, "SlowlightError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object inst = py::reinterpret_borrow<py::object>(exc.ptr())(e.what());
            inst.attr("kind") = to_string(e.kind());
            PyErr_SetObject(exc.ptr(), inst.ptr());
        }
    });

    py::class_<PhysicalParams>(m, "PhysicalParams")
        .def(py::init(&make_params), py::kw_only(), py::arg("u"), py::arg("kappa"), py::arg("omega_c"),
             py::arg("n_1d"), py::arg("length"), py::arg("mode_area"), py::arg("delta") = 0.0,
             py::arg("gamma") = 0.0, py::arg("sigma0") = 0.0)
        .def_property_readonly("u", &PhysicalParams::u)
        .def_property_readonly("kappa", &PhysicalParams::kappa)
        .def_property_readonly("omega_c", &PhysicalParams::omega_c)
        .def_property_readonly("n_1d", &PhysicalParams::n_1d)
        .def_property_readonly("length", &PhysicalParams::length)
        .def_property_readonly("mode_area", &PhysicalParams::mode_area)
        .def_property_readonly("delta", &PhysicalParams::delta)
        .def_property_readonly("gamma", &PhysicalParams::gamma)
        .def_property_readonly("sigma0", &PhysicalParams::sigma0)
        .def_property_readonly("saturation_density", &PhysicalParams::saturation_density)
        .def_property_readonly("atom_number", &PhysicalParams::atom_number);

    m.def("derived_rho", &derived_rho);
    m.def("optical_density", &optical_density);
    m.def("beer_length", &beer_length);
    m.def("spectral_window", [](const PhysicalParams& p, const std::string& regime) {
        if (regime == "dense")
            return spectral_window(p, WindowRegime::dense);
        if (regime == "far_detuned")
            return spectral_window(p, WindowRegime::far_detuned);
        throw Error(ErrorKind::invalid_argument, "regime must be 'dense' or 'far_detuned'");
    }, py::arg("p"), py::arg("regime"));

    m.def("log_norm_a", &log_norm_a, py::arg("n_atoms"), py::arg("m_pol"), py::arg("xi"));
    m.def("y_exact", &y_exact, py::arg("n_atoms"), py::arg("m_pol"), py::arg("c"));
    m.def("j_of", py::overload_cast<double, double, double>(&j_of), py::arg("p_s"), py::arg("p_q"), py::arg("a"));
    m.def("k_of", py::overload_cast<double, double, double>(&k_of), py::arg("p_s"), py::arg("p_q"), py::arg("a"));
    m.def("dk_error", py::overload_cast<std::int64_t, std::int64_t, double>(&dk_error), py::arg("n_atoms"),
          py::arg("m_pol"), py::arg("c"));
    m.def("dk_curve", [](std::int64_t n_atoms, double c, std::int64_t m_max) {
        py::dict out;
        std::vector<double> ratio, y, k, d;
        for (const auto& pt : dk_curve(n_atoms, c, m_max)) {
            ratio.push_back(pt.m_ratio);
            y.push_back(pt.y_exact);
            k.push_back(pt.k_approx);
            d.push_back(pt.d_k);
        }
        out["m_ratio"] = ratio;
        out["y_exact"] = y;
        out["k_approx"] = k;
        out["d_k"] = d;
        return out;
    }, py::arg("n_atoms"), py::arg("c"), py::arg("m_max"));

    m.def("build_dark_state", [](std::int64_t n_atoms, std::int64_t m_pol, double xi) {
        return build_dark_state(n_atoms, m_pol, xi).amps;
    }, py::arg("n_atoms"), py::arg("m_pol"), py::arg("xi"));
    m.def("dark_condition_residual", [](std::int64_t n_atoms, std::int64_t m_pol, double xi, const PhysicalParams& p) {
        const auto r = dark_condition_residual(build_dark_state(n_atoms, m_pol, xi), p);
        return py::make_tuple(r.r_e, r.r_ds);
    }, py::arg("n_atoms"), py::arg("m_pol"), py::arg("xi"), py::arg("p"));
    m.def("zero_energy_check", &zero_energy_check, py::arg("n_atoms"), py::arg("m_pol"), py::arg("xi"), py::arg("p"));
    m.def("params_for_xi", &params_for_xi, py::arg("xi"), py::arg("delta") = 0.0);

    m.def("single_excitation_spectrum", [](double dk, const PhysicalParams& p) {
        py::list out;
        for (const auto& e : single_excitation_spectrum(dk, p))
            out.append(eigenpair_dict(e));
        return out;
    }, py::arg("dk"), py::arg("p"));
    m.def("dark_branch_group_velocity", &dark_branch_group_velocity);
    m.def("vgr_quantum", &vgr_quantum, py::arg("p_s"), py::arg("p"));
    m.def("vgr_kuang", &vgr_kuang, py::arg("j"), py::arg("p"));
    m.def("adiabatic_two_level", [](double domega, const PhysicalParams& p) {
        const auto t = adiabatic_two_level(domega, p);
        py::dict d;
        d["omega_plus"] = t.omega_plus;
        d["omega_minus"] = t.omega_minus;
        d["theta"] = t.theta;
        return d;
    }, py::arg("domega"), py::arg("p"));

    m.def("gaussian_entrance_flux", &gaussian_entrance_flux, py::arg("t"), py::arg("peak_density"),
          py::arg("width"), py::arg("t_center"), py::arg("m_mean"), py::arg("p"));
    m.def("solve_transit", [](const std::vector<double>& t, const std::vector<double>& flux_in, double m_mean,
                              const PhysicalParams& p, const std::string& mode, bool strict) {
        TransitOptions opts;
        if (mode == "lossless")
            opts.mode = TransitMode::lossless;
        else if (mode == "absorbing")
            opts.mode = TransitMode::absorbing;
        else
            throw Error(ErrorKind::invalid_argument, "mode must be 'lossless' or 'absorbing'");
        opts.strict = strict;
        const auto r = solve_transit(t, flux_in, m_mean, p, opts);
        py::dict d;
        d["t"] = r.t;
        d["flux_in"] = r.flux_in;
        d["flux_out"] = r.flux_out;
        d["delay"] = r.delay;
        d["transmitted_fraction"] = r.transmitted_fraction;
        d["fwhm_in"] = r.fwhm_in;
        d["fwhm_out"] = r.fwhm_out;
        d["break_time"] = r.break_time ? py::cast(*r.break_time) : py::none();
        return d;
    }, py::arg("t"), py::arg("flux_in"), py::arg("m_mean"), py::arg("p"), py::arg("mode") = "absorbing",
       py::arg("strict") = false);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
            py::gil_scoped_release release;
            code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run a CLI subcommand; returns (exit_code, stdout, stderr).");
}
