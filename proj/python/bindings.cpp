#include <map>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gradix/cases.hpp"
#include "gradix/config.hpp"
#include "gradix/metrics.hpp"
#include "gradix/rte.hpp"
#include "gradix/sampling.hpp"
#include "gradix/training.hpp"
#include "gradix/verify.hpp"

namespace py = pybind11;
using namespace gradix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<std::string> coord_names(const CaseSpec& spec) {
    std::vector<std::string> out;
    for (auto c : spec.coords) out.emplace_back(coord_name(c));
    return out;
}

// Rows of `points` are network inputs in the case's coordinate order.
std::vector<Point> to_points(const CaseSpec& spec, const Array& points) {
    const auto dim = static_cast<py::ssize_t>(spec.input_dim());
    if (points.ndim() == 1 && dim == 1) {
        std::vector<Point> out(static_cast<std::size_t>(points.shape(0)));
        for (py::ssize_t i = 0; i < points.shape(0); ++i) set_coord(out[i], spec.coords[0], points.at(i));
        return out;
    }
    if (points.ndim() != 2 || points.shape(1) != dim) {
        throw UsageError("points must have shape (N, " + std::to_string(dim) + ")");
    }
    std::vector<Point> out(static_cast<std::size_t>(points.shape(0)));
    for (py::ssize_t i = 0; i < points.shape(0); ++i)
        for (py::ssize_t k = 0; k < dim; ++k) set_coord(out[i], spec.coords[k], points.at(i, k));
    return out;
}

template <class F>
Array map_points(const CaseSpec& spec, const Array& points, F&& f) {
    const auto pts = to_points(spec, points);
    Array out(static_cast<py::ssize_t>(pts.size()));
    auto view = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < pts.size(); ++i) view(i) = f(pts[i]);
    return out;
}

Array points_array(const CaseSpec& spec, const std::vector<Point>& pts) {
    const auto dim = static_cast<py::ssize_t>(spec.input_dim());
    Array out({static_cast<py::ssize_t>(pts.size()), dim});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (py::ssize_t k = 0; k < dim; ++k) view(i, k) = coord_of(pts[i], spec.coords[k]);
    return out;
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

struct Run {
    CaseSpec spec;
    TrainResult result;
    ErrorReport report;
};

Run train_from_config(const py::dict& config, bool desk, std::optional<std::uint64_t> seed) {
    RunConfig c = parse_run_config(from_python(config));
    if (desk) apply_desk(c);
    if (seed) c.seed = *seed;
    Run run;
    run.spec = build_case(c);
    const Architecture arch = build_architecture(c, run.spec);
    {
        py::gil_scoped_release release;
        run.result = train(run.spec, c.counts, arch, c.loss, c.optimizer, c.seed);
        run.report = report(run.result, run.spec, test_grid(run.spec), c.bound);
    }
    return run;
}

BoundInputs bound_inputs(const py::kwargs& kw) {
    BoundInputs in;
    const std::map<std::string, double BoundInputs::*> reals = {
        {"T", &BoundInputs::T},         {"nu", &BoundInputs::nu},       {"c", &BoundInputs::c},
        {"ks_inf", &BoundInputs::ks_inf}, {"sigma_g_inf", &BoundInputs::sigma_g_inf}, {"V2", &BoundInputs::V2},
        {"l", &BoundInputs::l},         {"C_eps", &BoundInputs::C_eps}, {"hk_sb", &BoundInputs::hk_sb},
        {"hk_int", &BoundInputs::hk_int}, {"V_bar", &BoundInputs::V_bar}};
    const std::map<std::string, std::size_t BoundInputs::*> counts = {
        {"N_int", &BoundInputs::N_int}, {"N_sb", &BoundInputs::N_sb}, {"N_tb", &BoundInputs::N_tb},
        {"N_S", &BoundInputs::N_S}};
    const std::map<std::string, int BoundInputs::*> ints = {{"a", &BoundInputs::a}, {"d", &BoundInputs::d}};
    for (const auto& [key, value] : kw) {
        const auto k = key.cast<std::string>();
        if (auto r = reals.find(k); r != reals.end()) {
            in.*(r->second) = value.cast<double>();
        } else if (auto n = counts.find(k); n != counts.end()) {
            in.*(n->second) = value.cast<std::size_t>();
        } else if (auto i = ints.find(k); i != ints.end()) {
            in.*(i->second) = value.cast<int>();
        } else {
            throw UsageError("unknown bound input '" + k + "'");
        }
    }
    return in;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Physics-informed solver for the radiative transfer equation";

    py::register_exception<TrainingAbort>(m, "TrainingAbort", PyExc_RuntimeError);

    m.def("case_names", &case_names);

    py::class_<CaseSpec>(m, "Case")
        .def(py::init([](const std::string& name, std::optional<double> ke) {
                 CaseOptions o;
                 o.ke = ke;
                 return make_case(name, o);
             }),
             py::arg("name"), py::arg("ke") = py::none())
        .def_readonly("name", &CaseSpec::name)
        .def_readonly("ke", &CaseSpec::ke)
        .def_readonly("spatial_dim", &CaseSpec::spatial_dim)
        .def_readonly("inverse", &CaseSpec::inverse)
        .def_property_readonly("coords", &coord_names)
        .def("exact",
             [](const CaseSpec& s, const Array& pts) {
                 if (!s.has_exact()) throw UsageError("case '" + s.name + "' has no exact solution");
                 return map_points(s, pts, [&](const Point& p) { return s.exact(p); });
             })
        .def("source", [](const CaseSpec& s, const Array& pts) {
            return map_points(s, pts, [&](const Point& p) { return s.source(p); });
        })
        .def(
            "oracle",
            [](const CaseSpec& s, const Array& pts, int steps) {
                return map_points(s, pts, [&](const Point& p) { return oracle_integrate_characteristic(s, p, steps); });
            },
            py::arg("points"), py::arg("steps") = 4000)
        .def("test_points", [](const CaseSpec& s) { return points_array(s, test_grid(s).points.points); })
        .def("__repr__", [](const CaseSpec& s) { return "Case('" + s.name + "', ke=" + std::to_string(s.ke) + ")"; });

    py::class_<Run>(m, "Run")
        .def_property_readonly("case", [](const Run& r) { return r.spec; })
        .def_property_readonly("report", [](const Run& r) { return to_python(to_json(r.report)); })
        .def_property_readonly("train", [](const Run& r) { return to_python(to_json(r.result)); })
        .def_property_readonly("final_loss", [](const Run& r) { return r.result.final_loss; })
        .def_property_readonly("loss_history", [](const Run& r) { return r.result.loss_history; })
        .def_property_readonly("params", [](const Run& r) { return flatten(r.result.params); })
        .def("predict", [](const Run& r, const Array& pts) {
            return map_points(r.spec, pts, [&](const Point& p) { return network_at(r.result.params, r.spec, p); });
        });

    m.def("train", &train_from_config, py::arg("config"), py::arg("desk") = false, py::arg("seed") = py::none());

    m.def("verify", [] {
        py::list out;
        for (const auto& c : run_verify_suite()) {
            py::dict d;
            d["name"] = c.name;
            d["passed"] = c.passed;
            d["measured"] = c.measured;
            d["tolerance"] = c.tolerance;
            d["detail"] = c.detail;
            out.append(d);
        }
        return out;
    });

    m.def("sobol", [](std::size_t dim, std::size_t n) {
        const auto pts = sobol(dim, n);
        Array out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(dim)});
        auto view = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dim; ++k) view(i, k) = pts[i][k];
        return out;
    });
    m.def("gauss_legendre", [](std::size_t n, double a, double b) {
        const auto rule = gauss_legendre(n, a, b);
        std::vector<double> nodes;
        for (const auto& x : rule.nodes) nodes.push_back(x[0]);
        return py::make_tuple(nodes, rule.weights);
    });

    m.def(
        "forward_bound",
        [](const std::array<double, 4>& errors, const py::kwargs& kw) { return forward_bound(bound_inputs(kw), errors); },
        py::arg("errors"));
    m.def(
        "steady_forward_bound",
        [](const std::array<double, 4>& errors, const py::kwargs& kw) {
            return steady_forward_bound(bound_inputs(kw), errors);
        },
        py::arg("errors"));
}
