#include "topobayes/classifier.hpp"
#include "topobayes/errors.hpp"
#include "topobayes/filtration.hpp"
#include "topobayes/intensity.hpp"
#include "topobayes/posterior.hpp"
#include "topobayes/signal.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace topobayes;

namespace {

BandSpec band_from(const py::object& band) {
    if (py::isinstance<py::str>(band)) {
        return BandSpec::named(band.cast<std::string>());
    }
    const auto [lo, hi] = band.cast<std::pair<double, double>>();
    return {lo, hi, 3};
}

std::vector<std::pair<double, double>> pairs_of(const RawDiagram& raw) {
    std::vector<std::pair<double, double>> out;
    out.reserve(raw.pairs.size());
    for (const auto& p : raw.pairs) {
        out.emplace_back(p.birth, p.death);
    }
    return out;
}

RawDiagram raw_from(const std::vector<std::pair<double, double>>& pairs) {
    RawDiagram raw;
    for (const auto& [b, d] : pairs) {
        raw.pairs.push_back({b, d});
    }
    return raw;
}

std::vector<std::pair<double, double>> points_of(const PersistenceDiagram& d) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : d.points()) {
        out.emplace_back(p.birth, p.persistence);
    }
    return out;
}

PersistenceDiagram diagram_from(const std::vector<std::pair<double, double>>& points, double b_min) {
    std::vector<WedgePoint> pts;
    for (const auto& [b, p] : points) {
        pts.push_back({b, p});
    }
    return PersistenceDiagram(std::move(pts), b_min);
}

GaussianMixtureIntensity mixture_from(const std::vector<std::tuple<double, std::pair<double, double>, double>>& comps) {
    std::vector<GaussianComponent> out;
    for (const auto& [w, mu, var] : comps) {
        out.push_back({w, {mu.first, mu.second}, var});
    }
    return GaussianMixtureIntensity(std::move(out));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bayesian classification of signals through persistence diagrams";

    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // signals
    m.def(
        "generate_band_signal",
        [](const py::object& band, double duration, double rate, std::uint64_t seed) {
            const auto s = generate_band_signal(band_from(band), duration, rate, seed);
            return std::vector<double>(s.samples().begin(), s.samples().end());
        },
        py::arg("band"), py::arg("duration") = 2.0, py::arg("rate") = 256.0, py::arg("seed") = 0,
        "Unit-RMS random sum of sinusoids in a band ('alpha', 'beta' or (f_low, f_high)).");
    m.def(
        "add_noise",
        [](std::vector<double> samples, double snr_db, std::uint64_t seed) {
            const auto s = add_noise(Signal(std::move(samples), 1.0), snr_db, seed);
            return std::vector<double>(s.samples().begin(), s.samples().end());
        },
        py::arg("samples"), py::arg("snr_db"), py::arg("seed") = 0, "Add white Gaussian noise at the given SNR (dB).");

    // persistence
    py::class_<PersistenceDiagram>(m, "PersistenceDiagram")
        .def(py::init(&diagram_from), py::arg("points") = std::vector<std::pair<double, double>>{},
             py::arg("b_min") = 0.0)
        .def_property_readonly("points", &points_of)
        .def_property_readonly("b_min", &PersistenceDiagram::b_min)
        .def("__len__", &PersistenceDiagram::size)
        .def("__eq__", [](const PersistenceDiagram& a, const PersistenceDiagram& b) { return a == b; })
        .def("to_json", &diagram_to_json)
        .def_static("from_json", &diagram_from_json)
        .def("__repr__", [](const PersistenceDiagram& d) {
            std::ostringstream s;
            s << "PersistenceDiagram(" << d.size() << " points, b_min=" << d.b_min() << ")";
            return s.str();
        });

    m.def(
        "sublevel_pd", [](const std::vector<double>& values) { return pairs_of(sublevel_pd(values)); },
        py::arg("values"), "Sublevel-set H0 persistence pairs (birth, death).");
    m.def(
        "tilt", [](const std::vector<std::pair<double, double>>& pairs) { return tilt(raw_from(pairs)); },
        py::arg("pairs"), "Map (birth, death) pairs to a birth-persistence diagram.");
    m.def(
        "untilt", [](const PersistenceDiagram& d) { return pairs_of(untilt(d)); }, py::arg("diagram"));
    m.def(
        "diagram", [](const std::vector<double>& values) { return tilt(sublevel_pd(values)); }, py::arg("values"),
        "Tilted sublevel persistence diagram of a signal.");
    m.def(
        "bottleneck_distance",
        [](const std::vector<std::pair<double, double>>& a, const std::vector<std::pair<double, double>>& b) {
            return bottleneck_distance(raw_from(a), raw_from(b));
        },
        py::arg("a"), py::arg("b"), "Bottleneck distance between (birth, death) pair lists.");
    m.def(
        "bottleneck_distance",
        [](const PersistenceDiagram& a, const PersistenceDiagram& b) { return bottleneck_distance(a, b); },
        py::arg("a"), py::arg("b"));

    // intensities
    py::class_<GaussianMixtureIntensity>(m, "GaussianMixture")
        .def(py::init(&mixture_from), py::arg("components"),
             "components: list of (weight, (birth, persistence), variance)")
        .def_property_readonly("components",
                               [](const GaussianMixtureIntensity& g) {
                                   std::vector<std::tuple<double, std::pair<double, double>, double>> out;
                                   for (const auto& c : g.components()) {
                                       out.emplace_back(c.weight, std::pair{c.mean.birth, c.mean.persistence},
                                                        c.variance);
                                   }
                                   return out;
                               })
        .def_property_readonly("total_mass", &GaussianMixtureIntensity::total_mass)
        .def("__len__", &GaussianMixtureIntensity::size)
        .def("__call__", [](const GaussianMixtureIntensity& g, double b, double p) { return g({b, p}); },
             py::arg("birth"), py::arg("persistence"))
        .def("log_eval", [](const GaussianMixtureIntensity& g, double b, double p) { return g.log_eval({b, p}); },
             py::arg("birth"), py::arg("persistence"))
        .def("grid",
             [](const GaussianMixtureIntensity& g, std::tuple<double, double, double, double> bounds,
                std::size_t n_birth, std::size_t n_persistence) {
                 const auto [b0, p0, b1, p1] = bounds;
                 const auto grid = intensity_grid(g, {b0, p0, b1, p1}, n_birth, n_persistence);
                 std::vector<std::vector<double>> rows(n_persistence, std::vector<double>(n_birth));
                 for (std::size_t r = 0; r < n_persistence; ++r) {
                     for (std::size_t c = 0; c < n_birth; ++c) {
                         rows[r][c] = grid.at(r, c);
                     }
                 }
                 return rows;
             },
             py::arg("bounds"), py::arg("n_birth") = 100, py::arg("n_persistence") = 100,
             "Intensity on a grid (rows = persistence), scaled so the maximum is 1.")
        .def("to_json", &mixture_to_json)
        .def_static("from_json", &mixture_from_json);

    // posterior
    py::class_<PosteriorConfig>(m, "PosteriorConfig")
        .def(py::init([](double alpha, double sigma_obs, std::optional<GaussianMixtureIntensity> clutter) {
                 PosteriorConfig cfg;
                 cfg.alpha = alpha;
                 cfg.sigma_obs = sigma_obs;
                 if (clutter) {
                     cfg.clutter = *clutter;
                 }
                 cfg.validate();
                 return cfg;
             }),
             py::arg("alpha") = 0.7, py::arg("sigma_obs") = 0.1, py::arg("clutter") = py::none())
        .def_readwrite("alpha", &PosteriorConfig::alpha)
        .def_readwrite("sigma_obs", &PosteriorConfig::sigma_obs)
        .def_readwrite("clutter", &PosteriorConfig::clutter);

    m.def(
        "posterior_intensity",
        [](const GaussianMixtureIntensity& prior, const std::vector<PersistenceDiagram>& observations,
           const PosteriorConfig& cfg) { return posterior_intensity(prior, observations, cfg); },
        py::arg("prior"), py::arg("observations"), py::arg("config") = PosteriorConfig{},
        "Closed-form posterior intensity given training diagrams.");

    // classification
    py::class_<ClassModel>(m, "ClassModel")
        .def(py::init<std::string, GaussianMixtureIntensity>(), py::arg("label"), py::arg("posterior"))
        .def_property_readonly("label", &ClassModel::label)
        .def_property_readonly("posterior", &ClassModel::posterior)
        .def_property_readonly("lambda_", &ClassModel::lambda)
        .def("to_json", &model_to_json)
        .def_static("from_json", &model_from_json);

    m.def(
        "fit_class_model",
        [](const std::vector<PersistenceDiagram>& training, const GaussianMixtureIntensity& prior,
           const PosteriorConfig& cfg, std::string label) {
            return fit_class_model(training, prior, cfg, std::move(label));
        },
        py::arg("training"), py::arg("prior"), py::arg("config"), py::arg("label"));
    m.def("diagram_log_density", &diagram_log_density, py::arg("diagram"), py::arg("model"));
    m.def("log_bayes_factor", &log_bayes_factor, py::arg("diagram"), py::arg("model_i"), py::arg("model_j"));

    py::class_<Classification>(m, "Classification")
        .def_readonly("label", &Classification::label)
        .def_readonly("votes", &Classification::votes)
        .def_readonly("log_densities", &Classification::log_densities);
    m.def(
        "classify",
        [](const PersistenceDiagram& d, const std::vector<ClassModel>& models, double c) {
            return classify(d, models, c);
        },
        py::arg("diagram"), py::arg("models"), py::arg("threshold") = 1.0,
        "Pairwise Bayes-factor voting over the class models.");

    py::class_<CvReport>(m, "CvReport")
        .def_readonly("accuracy", &CvReport::accuracy)
        .def_readonly("per_fold", &CvReport::per_fold)
        .def_readonly("labels", &CvReport::labels)
        .def_readonly("confusion", &CvReport::confusion)
        .def_readonly("fold_of", &CvReport::fold_of)
        .def_readonly("predicted", &CvReport::predicted);
    m.def(
        "cross_validate",
        [](const std::vector<PersistenceDiagram>& diagrams, const std::vector<std::string>& labels,
           const GaussianMixtureIntensity& prior, const PosteriorConfig& cfg, int k_folds, double threshold,
           std::uint64_t seed, std::size_t threads) {
            if (diagrams.size() != labels.size()) {
                throw ValidationError("cross_validate: diagrams and labels differ in length");
            }
            LabeledDataset data;
            data.k_folds = k_folds;
            for (std::size_t i = 0; i < diagrams.size(); ++i) {
                data.entries.push_back({diagrams[i], labels[i]});
            }
            CvOptions opts;
            opts.seed = seed;
            opts.threads = threads;
            py::gil_scoped_release release;
            return cross_validate(data, prior, cfg, threshold, opts);
        },
        py::arg("diagrams"), py::arg("labels"), py::arg("prior"), py::arg("config") = PosteriorConfig{},
        py::arg("k_folds") = 10, py::arg("threshold") = 1.0, py::arg("seed") = 0, py::arg("threads") = 1,
        "Stratified k-fold cross validation.");
}
