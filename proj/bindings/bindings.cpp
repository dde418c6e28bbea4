// Python bindings for the main operations: tree arithmetic, disorder
// sampling, Green recursions, the population-dynamics pool and its
// estimators, wave-packet dynamics, and the inequality checks.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bethe/bounds.hpp"
#include "bethe/config.hpp"
#include "bethe/dynamics.hpp"
#include "bethe/io.hpp"
#include "bethe/population.hpp"
#include "bethe/runner.hpp"

namespace py = pybind11;
using namespace bethe;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<std::complex<double>> to_array(const std::vector<cplx>& v) {
    py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<cplx> from_complex_array(const py::array_t<std::complex<double>>& a) {
    const auto buf = a.request();
    const auto* p = static_cast<const std::complex<double>*>(buf.ptr);
    return {p, p + buf.size};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "quantum transport laboratory on rooted regular trees";
    m.attr("__version__") = kVersionString;

    py::class_<TreeGeometry>(m, "TreeGeometry")
        .def(py::init<std::int64_t, std::int64_t>(), py::arg("branching"), py::arg("depth"))
        .def_property_readonly("branching", &TreeGeometry::branching)
        .def_property_readonly("depth", &TreeGeometry::depth)
        .def("vertex_count", &TreeGeometry::vertex_count)
        .def("shell_of", &TreeGeometry::shell_of, py::arg("index"))
        .def("shell_start", &TreeGeometry::shell_start, py::arg("n"))
        .def("parent_of", &TreeGeometry::parent_of, py::arg("index"))
        .def("children_of", &TreeGeometry::children_of, py::arg("index"))
        .def("is_leaf", &TreeGeometry::is_leaf, py::arg("index"));

    py::class_<PotentialDistribution>(m, "PotentialDistribution")
        .def_static("uniform", &PotentialDistribution::uniform, py::arg("width"))
        .def_static("gaussian", &PotentialDistribution::gaussian, py::arg("sigma"))
        .def_static("table", &PotentialDistribution::table, py::arg("points"))
        .def("density_sup", &PotentialDistribution::density_sup)
        .def("abs_moment", &PotentialDistribution::abs_moment, py::arg("r"))
        .def("tail_prob", &PotentialDistribution::tail_prob, py::arg("w"))
        .def("cdf", &PotentialDistribution::cdf, py::arg("v"))
        .def("support", &PotentialDistribution::support)
        .def("describe", &PotentialDistribution::describe);

    py::class_<PotentialField>(m, "PotentialField")
        .def_property_readonly("values", [](const PotentialField& f) { return to_array(f.values); })
        .def_readonly("seed", &PotentialField::seed)
        .def("max_abs", &PotentialField::max_abs);

    m.def("sample_field", &sample_field, py::arg("dist"), py::arg("geometry"), py::arg("seed"));
    m.def("spectrum_interval", &spectrum_interval, py::arg("branching"), py::arg("dist"));

    py::class_<ComplexEnergy>(m, "ComplexEnergy")
        .def(py::init<double, double>(), py::arg("E"), py::arg("eta"))
        .def_readonly("E", &ComplexEnergy::E)
        .def_readonly("eta", &ComplexEnergy::eta);

    m.def("free_green", &free_green, py::arg("branching"), py::arg("zeta"));
    m.def(
        "forward_gamma",
        [](const PotentialField& f, const TreeGeometry& g, const ComplexEnergy& z) {
            return to_array(forward_sweep(f, g, z).gamma);
        },
        py::arg("field"), py::arg("geometry"), py::arg("ze"));
    m.def(
        "resolvent_column",
        [](const PotentialField& f, const TreeGeometry& g, const ComplexEnergy& z) {
            return to_array(resolvent_column(f, g, z).g0x);
        },
        py::arg("field"), py::arg("geometry"), py::arg("ze"));
    m.def(
        "dense_oracle",
        [](const PotentialField& f, const TreeGeometry& g, const ComplexEnergy& z) {
            return to_array(dense_oracle(f, g, z).g0x);
        },
        py::arg("field"), py::arg("geometry"), py::arg("ze"));

    py::class_<MomentEstimate>(m, "MomentEstimate")
        .def_readonly("mean", &MomentEstimate::mean)
        .def_readonly("std_error", &MomentEstimate::std_error)
        .def_readonly("n_samples", &MomentEstimate::n_samples)
        .def_readonly("max_share", &MomentEstimate::max_share)
        .def_readonly("heavy_tail_flagged", &MomentEstimate::heavy_tail_flagged);

    py::class_<GreenPool>(m, "GreenPool")
        .def(py::init<std::int64_t, PotentialDistribution, ComplexEnergy, std::int64_t,
                      std::uint64_t, std::int64_t>(),
             py::arg("branching"), py::arg("dist"), py::arg("ze"), py::arg("size"),
             py::arg("seed"), py::arg("min_burnin") = 100)
        .def("evolve", &GreenPool::evolve, py::arg("sweeps"), py::arg("threads") = 1)
        .def("root_samples",
             [](const GreenPool& p, std::int64_t n, std::uint64_t epoch) {
                 return to_array(p.root_samples(n, epoch));
             },
             py::arg("n"), py::arg("epoch") = 0)
        .def("entries",
             [](const GreenPool& p) {
                 return to_array(std::vector<cplx>(p.entries().begin(), p.entries().end()));
             })
        .def_property_readonly("sweeps_done", &GreenPool::sweeps_done)
        .def_property_readonly("stationary", &GreenPool::stationary);

    m.def(
        "cdf_im",
        [](const py::array_t<std::complex<double>>& samples, double x) {
            return cdf_im(from_complex_array(samples), x);
        },
        py::arg("samples"), py::arg("x"));
    m.def(
        "cdf_abs",
        [](const py::array_t<std::complex<double>>& samples, double y) {
            return cdf_abs(from_complex_array(samples), y);
        },
        py::arg("samples"), py::arg("y"));
    m.def(
        "inverse_moment",
        [](const py::array_t<std::complex<double>>& samples, double p) {
            return inverse_moment(from_complex_array(samples), p);
        },
        py::arg("samples"), py::arg("p"));
    m.def(
        "fractional_path_moment",
        [](const GreenPool& pool, double s, std::int64_t n, std::int64_t n_samples,
           std::uint64_t epoch) { return fractional_path_moment(pool, s, n, n_samples, epoch); },
        py::arg("pool"), py::arg("s"), py::arg("n"), py::arg("n_samples"), py::arg("epoch") = 0);

    py::class_<FreeEnergyEstimate>(m, "FreeEnergyEstimate")
        .def_readonly("s", &FreeEnergyEstimate::s)
        .def_readonly("slope", &FreeEnergyEstimate::slope)
        .def_readonly("slope_se", &FreeEnergyEstimate::slope_se)
        .def_readonly("intercept", &FreeEnergyEstimate::intercept)
        .def_readonly("fit_residual", &FreeEnergyEstimate::fit_residual)
        .def_readonly("low_confidence", &FreeEnergyEstimate::low_confidence);
    m.def(
        "free_energy",
        [](const GreenPool& pool, double s, const std::vector<std::int64_t>& n_range,
           std::int64_t n_samples, std::uint64_t epoch) {
            return free_energy(pool, s, n_range, n_samples, epoch);
        },
        py::arg("pool"), py::arg("s"), py::arg("n_range"), py::arg("n_samples"),
        py::arg("epoch") = 0);

    py::enum_<Phase>(m, "Phase")
        .value("pp_like", Phase::pp_like)
        .value("ac_like", Phase::ac_like)
        .value("undetermined", Phase::undetermined);
    py::class_<PhaseClassification>(m, "PhaseClassification")
        .def_readonly("phase", &PhaseClassification::phase)
        .def_readonly("psi_at_one", &PhaseClassification::psi_at_one)
        .def_readonly("sigma", &PhaseClassification::sigma)
        .def_readonly("margin", &PhaseClassification::margin);
    py::class_<ClassifyOptions>(m, "ClassifyOptions")
        .def(py::init<>())
        .def_readwrite("pool_size", &ClassifyOptions::pool_size)
        .def_readwrite("burnin", &ClassifyOptions::burnin)
        .def_readwrite("n_range", &ClassifyOptions::n_range)
        .def_readwrite("n_samples", &ClassifyOptions::n_samples)
        .def_readwrite("seed", &ClassifyOptions::seed)
        .def_readwrite("threads", &ClassifyOptions::threads);
    m.def("phase_classify", &phase_classify, py::arg("dist"), py::arg("branching"), py::arg("E"),
          py::arg("eta_probe") = 1e-3, py::arg("s_top") = 0.95,
          py::arg("opts") = ClassifyOptions{});

    py::class_<WavePacket>(m, "WavePacket")
        .def_property_readonly("amplitudes",
                               [](const WavePacket& p) { return to_array(p.amplitudes); })
        .def_readonly("time", &WavePacket::time)
        .def_readonly("norm_drift", &WavePacket::norm_drift);
    py::class_<ShellProfile>(m, "ShellProfile")
        .def_property_readonly("mass", [](const ShellProfile& p) { return to_array(p.mass); })
        .def_readonly("tag_value", &ShellProfile::tag_value)
        .def_readonly("boundary_contaminated", &ShellProfile::boundary_contaminated)
        .def("total", &ShellProfile::total);
    py::class_<EnergyWindow>(m, "EnergyWindow")
        .def(py::init<double, double>(), py::arg("E1"), py::arg("E2"));

    m.def("delta_packet", &delta_packet, py::arg("geometry"));
    m.def(
        "propagate",
        [](const PotentialField& f, const TreeGeometry& g, const WavePacket& psi0,
           const std::vector<double>& t_grid, double tol, int threads) {
            return propagate(f, g, psi0, t_grid, tol, threads);
        },
        py::arg("field"), py::arg("geometry"), py::arg("psi0"), py::arg("t_grid"),
        py::arg("tol") = 1e-10, py::arg("threads") = 1);
    m.def("shell_profile", &shell_profile, py::arg("geometry"), py::arg("psi"));
    m.def("moments", &moments, py::arg("profile"), py::arg("beta"));
    m.def("front_tail", &front_tail, py::arg("profile"), py::arg("v"), py::arg("t"));
    m.def("lingering", &lingering, py::arg("profile"), py::arg("R"));
    m.def("hat_moments", &hat_moments, py::arg("profile"), py::arg("beta"));

    py::class_<QuadSpec>(m, "QuadSpec")
        .def(py::init<>())
        .def_readwrite("nodes", &QuadSpec::nodes)
        .def_readwrite("max_nodes", &QuadSpec::max_nodes)
        .def_readwrite("rel_tol", &QuadSpec::rel_tol);
    py::class_<HatResult>(m, "HatResult")
        .def_readonly("profile", &HatResult::profile)
        .def_readonly("nodes_used", &HatResult::nodes_used)
        .def_readonly("converged", &HatResult::converged);
    m.def("hat_distribution", &hat_distribution, py::arg("field"), py::arg("geometry"),
          py::arg("window"), py::arg("eta"), py::arg("quad") = QuadSpec{},
          py::arg("threads") = 1);

    py::class_<BallisticCertificate>(m, "BallisticCertificate")
        .def_readonly("v_hat", &BallisticCertificate::v_hat)
        .def_readonly("mu", &BallisticCertificate::mu)
        .def("g", &BallisticCertificate::g, py::arg("alpha"))
        .def("tail_bound", &BallisticCertificate::tail_bound, py::arg("v"), py::arg("t"));
    m.def("ballistic_certificate", &ballistic_certificate, py::arg("branching"));

    // config-driven runner: takes the experiment config as a JSON string,
    // returns (exit_code, output files)
    m.def("run_json", [](const std::string& config_json) {
        ExperimentConfig config = config_from_json(nlohmann::json::parse(config_json));
        std::ostringstream log;
        const RunResult r = run_experiment(config, log);
        return py::make_tuple(r.exit_code, r.outputs, log.str());
    });
}
