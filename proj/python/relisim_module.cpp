#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <vector>

#include "relisim/analytics.hpp"
#include "relisim/error.hpp"
#include "relisim/estimators.hpp"
#include "relisim/experiment.hpp"
#include "relisim/girsanov.hpp"
#include "relisim/limit_state.hpp"
#include "relisim/rng.hpp"

namespace py = pybind11;
using namespace relisim;

namespace {

std::vector<std::uint8_t> to_indicators(const std::vector<int>& v) {
    std::vector<std::uint8_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != 0 && v[i] != 1) throw DomainError("indicators must be 0 or 1");
        out[i] = static_cast<std::uint8_t>(v[i]);
    }
    return out;
}

Quantity quantity_of(const std::string& s) {
    if (s == "failure") return Quantity::failure;
    if (s == "reliability") return Quantity::reliability;
    throw DomainError("report_as must be 'failure' or 'reliability'");
}

py::dict report_dict(const EstimateReport& r) {
    py::dict d;
    d["campaign"] = to_string(r.mode);
    d["topology"] = to_string(r.topology);
    d["report_as"] = to_string(r.report_as);
    d["estimate"] = r.estimate();
    d["failure"] = r.failure;
    d["failure_clamped"] = r.failure_clamped;
    d["reliability"] = r.reliability;
    d["samples"] = r.sample_count;
    d["failures"] = r.failures;
    d["excluded"] = r.excluded;
    d["variance"] = r.variance;
    d["std_error"] = r.std_error;
    d["ci95"] = py::make_tuple(r.ci_low(), r.ci_high());
    return d;
}

EstimateReport composed(const std::vector<std::vector<int>>& rows, const std::optional<std::vector<double>>& weights,
                        const std::string& report_as, bool series) {
    const auto matrix = IndicatorMatrix::from_rows(rows);
    std::optional<std::span<const double>> w;
    if (weights) w = std::span<const double>(*weights);
    return series ? series_estimate(matrix, w, quantity_of(report_as))
                  : parallel_estimate(matrix, w, quantity_of(report_as));
}

}  // namespace

PYBIND11_MODULE(_relisim, m) {
    m.doc() = "Crude and Girsanov importance-sampling reliability estimators for stochastic delay systems.";
    m.attr("__version__") = "0.1.0";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<RangeError>(m, "RangeError", PyExc_ArithmeticError);

    m.def("normal_cdf", [](double mu, double sigma, double t) { return normal_cdf({mu, sigma}, t); },
          py::arg("mu"), py::arg("sigma"), py::arg("t"));
    m.def("normal_hazard", [](double mu, double sigma, double t) { return normal_hazard({mu, sigma}, t); },
          py::arg("mu"), py::arg("sigma"), py::arg("t"));
    m.def("series_reliability", [](const std::vector<double>& p) { return series_reliability(p); });
    m.def("parallel_reliability", [](const std::vector<double>& p) { return parallel_reliability(p); });
    m.def("structure_series", [](const std::vector<int>& x) { return structure_series(x); });
    m.def("structure_parallel", [](const std::vector<int>& x) { return structure_parallel(x); });

    m.def(
        "crude_estimate",
        [](const std::vector<int>& ind, const std::string& report_as) {
            return report_dict(crude_estimate(to_indicators(ind), quantity_of(report_as)));
        },
        py::arg("indicators"), py::arg("report_as") = "failure");
    m.def(
        "is_estimate",
        [](const std::vector<double>& w, const std::vector<int>& ind, const std::string& report_as) {
            return report_dict(is_estimate(w, to_indicators(ind), quantity_of(report_as)));
        },
        py::arg("weights"), py::arg("indicators"), py::arg("report_as") = "failure");
    m.def(
        "series_estimate",
        [](const std::vector<std::vector<int>>& rows, std::optional<std::vector<double>> w, const std::string& q) {
            return report_dict(composed(rows, w, q, true));
        },
        py::arg("indicators"), py::arg("weights") = py::none(), py::arg("report_as") = "failure");
    m.def(
        "parallel_estimate",
        [](const std::vector<std::vector<int>>& rows, std::optional<std::vector<double>> w, const std::string& q) {
            return report_dict(composed(rows, w, q, false));
        },
        py::arg("indicators"), py::arg("weights") = py::none(), py::arg("report_as") = "failure");

    m.def(
        "martingale_check",
        [](const std::vector<double>& w, double tol_sigma) {
            const auto r = martingale_check(w, tol_sigma);
            py::dict d;
            d["pass"] = r.pass;
            d["mean"] = r.mean;
            d["std_error"] = r.std_error;
            d["z"] = r.z;
            d["diagnostic"] = r.diagnostic;
            return d;
        },
        py::arg("weights"), py::arg("tol_sigma") = 3.0);
    m.def(
        "variance_law_check",
        [](double p, std::size_t samples, std::size_t batches, std::uint64_t seed) {
            const auto r = variance_law_check(p, samples, batches, seed);
            py::dict d;
            d["pass"] = r.pass;
            d["predicted"] = r.predicted;
            d["observed"] = r.observed;
            d["ratio"] = r.ratio;
            d["observed_doubled"] = r.observed_doubled;
            d["halving_ratio"] = r.halving_ratio;
            return d;
        },
        py::arg("p"), py::arg("samples"), py::arg("batches"), py::arg("seed") = 0x5eed0001ULL);
    m.def(
        "gaussian_increments",
        [](std::uint64_t seed, std::uint64_t index, std::size_t dimension, double step, std::size_t count) {
            const auto inc = gaussian_increments({seed, index, dimension, step}, count);
            std::vector<std::vector<double>> out(inc.count());
            for (std::size_t k = 0; k < inc.count(); ++k) out[k].assign(inc.at(k).begin(), inc.at(k).end());
            return out;
        },
        py::arg("seed"), py::arg("index"), py::arg("dimension"), py::arg("step"), py::arg("count"));

    m.def(
        "run_experiment",
        [](const std::string& config_json, std::optional<std::uint64_t> seed, std::optional<std::size_t> samples,
           std::optional<std::string> mode, unsigned workers) {
            Overrides o{seed, samples, mode, std::nullopt};
            const auto cfg = parse_config(config_json, o);
            RunArtifact artifact;
            {
                py::gil_scoped_release release;
                artifact = run_experiment(cfg, workers);
            }
            if (artifact.aborted) throw std::runtime_error("campaign aborted: " + *artifact.aborted);
            py::dict out;
            out["manifest_id"] = artifact.manifest_id;
            out["config"] = artifact.manifest["config"].dump();
            py::list reports;
            for (const auto& run : artifact.runs) {
                auto d = report_dict(run.result.report);
                if (run.result.martingale) d["martingale_z"] = run.result.martingale->z;
                reports.append(d);
            }
            out["reports"] = reports;
            return out;
        },
        py::arg("config_json"), py::arg("seed") = py::none(), py::arg("samples") = py::none(),
        py::arg("mode") = py::none(), py::arg("workers") = 1);
}
