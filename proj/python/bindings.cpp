#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "folddyn/characteristics.hpp"
#include "folddyn/dynamics.hpp"
#include "folddyn/model.hpp"
#include "folddyn/optics.hpp"
#include "folddyn/singular.hpp"
#include "folddyn/version.hpp"

namespace py = pybind11;
using namespace folddyn;

namespace {

py::dict bundle_dict(const DerivativeBundle& b) {
    py::dict d;
    d["L"] = b.L;
    d["L_r"] = b.L_r;
    d["L_x"] = b.L_x;
    d["L_xx"] = b.L_xx;
    d["L_xr"] = b.L_xr;
    d["E"] = b.E;
    d["E_r"] = b.E_r;
    d["E_x"] = b.E_x;
    d["E_xx"] = b.E_xx;
    d["E_xr"] = b.E_xr;
    return d;
}

py::dict jump_dict(const characteristics::JumpSolution& s) {
    py::dict d;
    d["x_bar"] = s.x_bar;
    d["u_bar"] = s.u_bar;
    d["u_tilde"] = s.u_tilde;
    d["phi_bar"] = s.phi_bar;
    d["phi_tilde"] = s.phi_tilde;
    d["delta_phi"] = s.delta_phi;
    d["x_star"] = s.x_star;
    d["a"] = s.a;
    d["branch_sign"] = s.branch_sign;
    d["tangent"] = s.tangent;
    return d;
}

const char* inout_name(singular::InOut c) {
    switch (c) {
        case singular::InOut::InPoint: return "in";
        case singular::InOut::OutPoint: return "out";
        case singular::InOut::Tangent: return "tangent";
    }
    return "?";
}

} // namespace

PYBIND11_MODULE(_folddyn, m) {
    m.doc() = "Fold-singular Lagrangian mechanics: oscillator jumps, characteristics, optics";
    m.attr("__version__") = version;

    py::class_<OscillatorParams>(m, "OscillatorParams")
        .def(py::init<double, double, double, double>(), py::arg("m") = 1.0,
             py::arg("c") = 1.0, py::arg("r0") = 1.0, py::arg("x_guard") = 1e-9)
        .def_readonly("m", &OscillatorParams::m)
        .def_readonly("c", &OscillatorParams::c)
        .def_readonly("r0", &OscillatorParams::r0)
        .def_property_readonly("k", &OscillatorParams::k)
        .def_static("nondimensional", &OscillatorParams::nondimensional);

    py::class_<PolarState>(m, "PolarState")
        .def(py::init<double, double, double, double>(), py::arg("r"), py::arg("phi"),
             py::arg("x"), py::arg("u"))
        .def_readonly("r", &PolarState::r)
        .def_readonly("phi", &PolarState::phi)
        .def_readonly("x", &PolarState::x)
        .def_readonly("u", &PolarState::u)
        .def("__repr__", [](const PolarState& s) {
            return "PolarState(r=" + std::to_string(s.r) + ", phi=" + std::to_string(s.phi) +
                   ", x=" + std::to_string(s.x) + ", u=" + std::to_string(s.u) + ")";
        });

    m.def("lagrangian", &lagrangian, py::arg("params"), py::arg("r"), py::arg("x"));
    m.def("energy", &energy, py::arg("params"), py::arg("r"), py::arg("x"));
    m.def("angular_momentum", &angular_momentum, py::arg("params"), py::arg("r"), py::arg("x"),
          py::arg("u"));
    m.def(
        "derivatives",
        [](const OscillatorParams& p, double r, double x) {
            return bundle_dict(derivatives(p, r, x));
        },
        py::arg("params"), py::arg("r"), py::arg("x"));
    m.def(
        "to_polar",
        [](const OscillatorParams& p, double q1, double q2, double v1, double v2) {
            return to_polar(p, CartesianState{q1, q2, v1, v2});
        },
        py::arg("params"), py::arg("q1"), py::arg("q2"), py::arg("v1"), py::arg("v2"));
    m.def(
        "to_cartesian",
        [](const OscillatorParams& p, const PolarState& s) {
            const CartesianState c = to_cartesian(p, s);
            return py::make_tuple(c.q1, c.q2, c.v1, c.v2);
        },
        py::arg("params"), py::arg("state"));
    m.def(
        "legendre_map",
        [](const OscillatorParams& p, const PolarState& s) {
            const MomentumChartPoint q = legendre_map(p, s);
            return py::make_tuple(q.r, q.phi, q.y, q.alpha);
        },
        py::arg("params"), py::arg("state"));

    m.def("hessian", &singular::hessian, py::arg("params"), py::arg("r"), py::arg("x"));
    m.def("r1_of_x", &singular::r1_of_x, py::arg("params"), py::arg("x"));
    m.def("x1_of_lambda", &singular::x1_of_lambda, py::arg("params"), py::arg("lambda_"));
    m.def("x2_of_lambda", &singular::x2_of_lambda, py::arg("params"), py::arg("lambda_"));
    m.def("g_surface", &singular::g_surface, py::arg("params"), py::arg("r"), py::arg("y"));
    m.def("relative_field_on_s1", &singular::relative_field_on_s1, py::arg("params"),
          py::arg("x"), py::arg("u"));
    m.def(
        "classify_inout",
        [](const OscillatorParams& p, double x, double u) {
            return inout_name(singular::classify_inout(p, x, u));
        },
        py::arg("params"), py::arg("x"), py::arg("u"));

    m.def("q_of_x", &characteristics::q_of_x, py::arg("params"), py::arg("x"));
    m.def("x_star", &characteristics::x_star, py::arg("params"), py::arg("a"));
    m.def(
        "delta_phi",
        [](const OscillatorParams& p, double x_bar, double u_bar) {
            const auto r = characteristics::delta_phi(p, x_bar, u_bar);
            py::dict d;
            d["raw"] = r.raw;
            d["wrapped"] = r.wrapped;
            d["branch_sign"] = r.branch_sign;
            d["a"] = r.a;
            d["x_star"] = r.x_star;
            return d;
        },
        py::arg("params"), py::arg("x_bar"), py::arg("u_bar"));
    m.def(
        "delta_phi_via_flow",
        [](const OscillatorParams& p, double x_bar, double u_bar) {
            return characteristics::delta_phi_via_flow(p, x_bar, u_bar);
        },
        py::arg("params"), py::arg("x_bar"), py::arg("u_bar"));
    m.def(
        "decisive_partner",
        [](const OscillatorParams& p, double x_bar, double u_bar,
           double phi_bar) -> py::object {
            const auto s = characteristics::decisive_partner(p, x_bar, u_bar, phi_bar);
            if (!s) return py::none();
            return jump_dict(*s);
        },
        py::arg("params"), py::arg("x_bar"), py::arg("u_bar"), py::arg("phi_bar") = 0.0);

    py::class_<dynamics::SimConfig>(m, "SimConfig")
        .def(py::init([](double t_max, int max_jumps, const std::string& policy,
                         double eps_restart, double rel_tol, double abs_tol) {
                 dynamics::SimConfig c;
                 c.t_max = t_max;
                 c.max_jumps = max_jumps;
                 c.eps_restart = eps_restart;
                 c.solver.rel_tol = rel_tol;
                 c.solver.abs_tol = abs_tol;
                 if (policy == "both")
                     c.branch_policy = dynamics::BranchPolicy::FollowBoth;
                 else if (policy == "sheet1")
                     c.branch_policy = dynamics::BranchPolicy::FollowSheet1;
                 else if (policy == "sheet2")
                     c.branch_policy = dynamics::BranchPolicy::FollowSheet2;
                 else
                     throw DomainError("policy must be both|sheet1|sheet2");
                 return c;
             }),
             py::arg("t_max") = 10.0, py::arg("max_jumps") = 8, py::arg("policy") = "both",
             py::arg("eps_restart") = 1e-7, py::arg("rel_tol") = 1e-10,
             py::arg("abs_tol") = 1e-12);

    m.def("state_on_level", &dynamics::state_on_level, py::arg("params"), py::arg("lambda_"),
          py::arg("mu"), py::arg("component") = 1, py::arg("u_sign") = 1);
    m.def(
        "simulate",
        [](const OscillatorParams& p, const PolarState& s0, const dynamics::SimConfig& cfg) {
            const dynamics::HybridTrajectory tr = dynamics::simulate(p, s0, cfg);
            py::list arcs;
            for (const auto& arc : tr.arcs) {
                py::dict a;
                a["branch_id"] = arc.branch_id;
                a["parent_id"] = arc.parent_id;
                a["sheet"] = arc.sheet;
                a["termination"] = dynamics::to_string(arc.termination);
                a["lambda"] = arc.lambda;
                a["mu"] = arc.mu;
                a["lambda_drift"] = arc.lambda_drift;
                a["mu_drift"] = arc.mu_drift;
                py::list samples;
                for (const auto& smp : arc.samples)
                    samples.append(py::make_tuple(smp.t, smp.state.r, smp.state.phi,
                                                  smp.state.x, smp.state.u));
                a["samples"] = samples;
                arcs.append(a);
            }
            py::list jumps;
            for (const auto& ev : tr.jumps) {
                py::dict j;
                j["t"] = ev.t;
                j["arrival_arc"] = ev.arrival_arc;
                j["arrival"] = ev.arrival;
                j["departures"] = ev.departures;
                j["departure_sheets"] = ev.departure_sheets;
                j["jump"] = jump_dict(ev.jump);
                jumps.append(j);
            }
            py::dict d;
            d["arcs"] = arcs;
            d["jumps"] = jumps;
            d["jump_count"] = tr.jump_count;
            py::list errs;
            for (const auto& e : tr.errors)
                errs.append(py::make_tuple(e.branch_id, e.message));
            d["errors"] = errs;
            return d;
        },
        py::arg("params"), py::arg("state0"), py::arg("config") = dynamics::SimConfig{});
    m.def(
        "level_topology",
        [](const OscillatorParams& p, double lambda) {
            const auto t = dynamics::level_topology(p, lambda);
            py::dict d;
            d["lambda"] = t.lambda;
            d["components"] = t.components;
            d["degenerate_contact"] = t.degenerate_contact;
            d["x1"] = t.x1 ? py::object(py::float_(*t.x1)) : py::object(py::none());
            d["x2"] = t.x2 ? py::object(py::float_(*t.x2)) : py::object(py::none());
            d["x_c"] = t.x_c ? py::object(py::float_(*t.x_c)) : py::object(py::none());
            return d;
        },
        py::arg("params"), py::arg("lambda_"));
    m.def(
        "closed_orbit_check",
        [](const OscillatorParams& p, double lambda, double mu) {
            const auto r = dynamics::closed_orbit_check(p, lambda, mu);
            py::dict d;
            d["period"] = r.period;
            d["residual_x"] = r.residual_x;
            d["residual_r"] = r.residual_r;
            d["x_start"] = r.x_start;
            d["min_x"] = r.min_x;
            d["margin_above_x2"] = r.margin_above_x2;
            return d;
        },
        py::arg("params"), py::arg("lambda_"), py::arg("mu"));

    py::class_<optics::MediumPair>(m, "MediumPair")
        .def(py::init<double, double, double>(), py::arg("n_plus"), py::arg("n_minus"),
             py::arg("c") = 1.0)
        .def_readonly("n_plus", &optics::MediumPair::n_plus)
        .def_readonly("n_minus", &optics::MediumPair::n_minus)
        .def_property_readonly("n_bar", &optics::MediumPair::n_bar);

    m.def(
        "optical_impact",
        [](const optics::MediumPair& medium, std::array<double, 3> q,
           std::array<double, 3> p_) {
            optics::RayState arrival;
            arrival.q = q;
            arrival.p = p_;
            const optics::ImpactOutcome out = optics::impact(medium, arrival);
            py::dict d;
            d["reflected_p"] = out.reflected.p;
            d["total_reflection"] = out.total_reflection;
            d["phi"] = out.phi;
            d["psi_plus"] = out.psi_plus;
            if (out.refracted) {
                d["refracted_p"] = out.refracted->p;
                d["psi_minus"] = *out.psi_minus;
            } else {
                d["refracted_p"] = py::none();
                d["psi_minus"] = py::none();
            }
            return d;
        },
        py::arg("medium"), py::arg("q"), py::arg("p"));
}
