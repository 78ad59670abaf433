#include "cli.hpp"

#include "topobayes/classifier.hpp"
#include "topobayes/errors.hpp"
#include "topobayes/filtration.hpp"
#include "topobayes/intensity.hpp"
#include "topobayes/io.hpp"
#include "topobayes/parallel.hpp"
#include "topobayes/posterior.hpp"
#include "topobayes/signal.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace topobayes::cli {

namespace {

struct GenerateArgs {
    std::vector<std::string> bands{"alpha", "beta"};
    int n = 100;
    double duration = 2.0;
    double rate = 256.0;
    std::optional<double> snr;
    std::uint64_t seed = 0;
    int k_folds = 10;
    std::string out;
};

struct PdArgs {
    std::vector<std::string> inputs;
    std::string manifest;
    std::optional<double> rate;
    std::string out;
};

struct ModelArgs {
    std::string config;
    std::string prior;
    std::string clutter;
    std::optional<double> alpha;
    std::optional<double> sigma_obs;
};

struct FitArgs {
    std::string dataset;
    std::vector<std::string> diagrams;
    std::string label;
    ModelArgs model;
    std::string out;
};

struct ClassifyArgs {
    std::vector<std::string> models;
    std::vector<std::string> diagrams;
    double threshold = 1.0;
    std::string out;
};

struct CvArgs {
    std::string dataset;
    ModelArgs model;
    std::optional<int> k_folds;
    double threshold = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

struct HeatmapArgs {
    std::string model;
    std::string bounds = "0,0,5,5";
    std::string res = "100x100";
    std::string out;
};

void add_model_options(CLI::App* cmd, ModelArgs& a) {
    cmd->add_option("--config", a.config, "Posterior config JSON {alpha, sigma_obs, clutter}");
    cmd->add_option("--prior", a.prior, "Prior mixture JSON (default: weight 1 on N*((3,3), 20 I))");
    cmd->add_option("--clutter", a.clutter, "Clutter mixture JSON (default: weight 0.1 on N*((3,3), 20 I))");
    cmd->add_option("--alpha", a.alpha, "Probability that a prior feature is observed (default 0.7)");
    cmd->add_option("--sigma-obs", a.sigma_obs, "Likelihood kernel variance (default 0.1)");
}

GaussianMixtureIntensity default_prior() {
    return GaussianMixtureIntensity({{1.0, {3.0, 3.0}, 20.0}});
}

GaussianMixtureIntensity resolve_prior(const ModelArgs& a) {
    return a.prior.empty() ? default_prior() : load_mixture(a.prior);
}

PosteriorConfig resolve_config(const ModelArgs& a) {
    PosteriorConfig cfg = a.config.empty() ? PosteriorConfig{} : load_config(a.config);
    if (!a.clutter.empty()) {
        cfg.clutter = load_mixture(a.clutter);
    }
    if (a.alpha) {
        cfg.alpha = *a.alpha;
    }
    if (a.sigma_obs) {
        cfg.sigma_obs = *a.sigma_obs;
    }
    cfg.validate();
    return cfg;
}

std::uint64_t band_seed(std::uint64_t seed, const std::string& band) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (unsigned char ch : band) {
        h = (h ^ ch) * 1099511628211ULL;
    }
    return mix_seed(seed, h);
}

std::string index_name(const std::string& prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04d", prefix.c_str(), i);
    return buf;
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text << '\n';
    } else {
        io::write_text(path, text + "\n");
    }
}

// Writes signals/<band>_NNNN.csv and signals.json under args.out.
nlohmann::json run_generate(const GenerateArgs& a) {
    if (a.out.empty()) {
        throw ValidationError("generate: --out is required");
    }
    if (a.n < 1) {
        throw ValidationError("generate: --n must be positive");
    }
    if (a.k_folds < 1) {
        throw ValidationError("generate: --k-folds must be positive");
    }
    std::vector<std::pair<std::string, BandSpec>> bands;
    for (const auto& name : a.bands) {
        bands.emplace_back(name, BandSpec::named(name));
    }
    // Validate every band against the rate before writing anything.
    for (const auto& [name, band] : bands) {
        generate_band_signal(band, a.duration, a.rate, 0);
    }

    nlohmann::json manifest;
    manifest["rate"] = a.rate;
    manifest["duration"] = a.duration;
    manifest["seed"] = a.seed;
    manifest["k_folds"] = a.k_folds;
    manifest["snr_db"] = a.snr ? nlohmann::json(*a.snr) : nlohmann::json(nullptr);
    manifest["entries"] = nlohmann::json::array();
    const fs::path root(a.out);
    for (const auto& [name, band] : bands) {
        const std::uint64_t bseed = band_seed(a.seed, name);
        for (int i = 0; i < a.n; ++i) {
            const std::uint64_t sseed = mix_seed(bseed, static_cast<std::uint64_t>(i));
            Signal s = generate_band_signal(band, a.duration, a.rate, sseed);
            if (a.snr) {
                s = add_noise(s, *a.snr, mix_seed(sseed, 0x6e6f697365ULL));
            }
            const std::string rel = "signals/" + index_name(name, i) + ".csv";
            save_signal_csv(s, root / rel);
            manifest["entries"].push_back({{"signal", rel}, {"label", name}});
        }
    }
    io::write_text(root / "signals.json", manifest.dump(2) + "\n");
    return manifest;
}

struct PdJob {
    fs::path input;
    fs::path output;
    std::string label;
    std::string output_rel;
};

// Returns the exit code; per-file failures are reported and skipped.
int run_pd(const PdArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<PdJob> jobs;
    std::optional<double> rate = a.rate;
    int k_folds = 10;
    const bool from_manifest = !a.manifest.empty();
    if (from_manifest) {
        const fs::path manifest(a.manifest);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(io::read_text(manifest));
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(manifest.string() + ": malformed signal manifest: " + e.what());
        }
        if (!doc.contains("entries") || !doc["entries"].is_array()) {
            throw ValidationError(manifest.string() + ": signal manifest needs an \"entries\" array");
        }
        if (!rate && doc.contains("rate") && doc["rate"].is_number()) {
            rate = doc["rate"].get<double>();
        }
        if (doc.contains("k_folds") && doc["k_folds"].is_number_integer()) {
            k_folds = doc["k_folds"].get<int>();
        }
        for (const auto& e : doc["entries"]) {
            if (!e.contains("signal") || !e["signal"].is_string()) {
                throw ValidationError(manifest.string() + ": each entry needs a \"signal\" path");
            }
            fs::path p = e["signal"].get<std::string>();
            const fs::path in = p.is_relative() ? manifest.parent_path() / p : p;
            const std::string rel = "diagrams/" + p.stem().string() + ".json";
            jobs.push_back({in, {}, e.value("label", ""), rel});
        }
    } else {
        for (const auto& in : a.inputs) {
            const fs::path p(in);
            jobs.push_back({p, {}, "", p.stem().string() + ".json"});
        }
    }
    if (jobs.empty()) {
        throw ValidationError("pd: no input signals");
    }
    if (a.out.empty() && (jobs.size() > 1 || from_manifest)) {
        throw ValidationError("pd: --out is required for more than one input");
    }
    for (auto& j : jobs) {
        if (!a.out.empty()) {
            j.output = fs::path(a.out) / j.output_rel;
        }
    }

    std::vector<int> status(jobs.size(), kOk);
    std::vector<std::string> messages(jobs.size());
    std::vector<std::string> printed(jobs.size());
    parallel_for(jobs.size(), default_thread_count(), [&](std::size_t i) {
        try {
            const Signal s = load_signal(jobs[i].input, SignalFormat::Auto, rate);
            const PersistenceDiagram d = tilt(sublevel_pd(s));
            if (jobs[i].output.empty()) {
                printed[i] = diagram_to_json(d);
            } else {
                save_diagram(d, jobs[i].output);
            }
        } catch (const IoError& e) {
            status[i] = kIo;
            messages[i] = e.what();
        } catch (const ValidationError& e) {
            status[i] = kValidation;
            messages[i] = e.what();
        }
    });

    int code = kOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (status[i] != kOk) {
            err << "pd: " << messages[i] << '\n';
            code = std::max(code, status[i]);
        } else if (!printed[i].empty()) {
            out << printed[i] << '\n';
        }
    }
    if (from_manifest) {
        nlohmann::json dataset;
        dataset["k_folds"] = k_folds;
        dataset["entries"] = nlohmann::json::array();
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (status[i] == kOk) {
                dataset["entries"].push_back({{"diagram", jobs[i].output_rel}, {"label", jobs[i].label}});
            }
        }
        io::write_text(fs::path(a.out) / "dataset.json", dataset.dump(2) + "\n");
    }
    return code;
}

void run_fit(const FitArgs& a, std::ostream& out) {
    if (a.out.empty()) {
        throw ValidationError("fit: --out is required");
    }
    const auto prior = resolve_prior(a.model);
    const auto cfg = resolve_config(a.model);
    std::map<std::string, std::vector<PersistenceDiagram>> training;
    if (!a.dataset.empty()) {
        const auto data = load_dataset(a.dataset);
        for (const auto& e : data.entries) {
            if (a.label.empty() || e.label == a.label) {
                training[e.label].push_back(e.diagram);
            }
        }
        if (training.empty()) {
            throw ValidationError("fit: no training diagrams" +
                                  (a.label.empty() ? std::string() : " with label '" + a.label + "'"));
        }
    } else {
        if (a.label.empty()) {
            throw ValidationError("fit: --label is required when fitting from diagram files");
        }
        auto& list = training[a.label];
        for (const auto& p : a.diagrams) {
            list.push_back(load_diagram(p));
        }
    }
    for (const auto& [label, diagrams] : training) {
        const auto model = fit_class_model(diagrams, prior, cfg, label);
        const fs::path path = fs::path(a.out) / ("model_" + label + ".json");
        save_model(model, path);
        out << label << ": " << model.posterior().size() << " components, lambda = " << model.lambda() << " -> "
            << path.string() << '\n';
    }
}

void run_classify(const ClassifyArgs& a, std::ostream& out) {
    std::vector<ClassModel> models;
    for (const auto& p : a.models) {
        models.push_back(load_model(p));
    }
    if (models.size() < 2) {
        throw ValidationError("classify: need at least two --model files (K >= 2)");
    }
    if (a.diagrams.empty()) {
        throw ValidationError("classify: no diagrams given");
    }
    nlohmann::json report;
    report["threshold_c"] = a.threshold;
    report["results"] = nlohmann::json::array();
    for (const auto& p : a.diagrams) {
        const auto d = load_diagram(p);
        auto entry = nlohmann::json::parse(classification_to_json(classify(d, models, a.threshold)));
        entry["diagram"] = p;
        report["results"].push_back(std::move(entry));
    }
    write_or_print(a.out, report.dump(2), out);
}

CvReport run_cv_on(const LabeledDataset& data, const ModelArgs& m, double threshold, std::uint64_t seed,
                   const std::string& out_path, std::ostream& out) {
    const auto prior = resolve_prior(m);
    const auto cfg = resolve_config(m);
    CvOptions opts;
    opts.seed = seed;
    opts.threads = default_thread_count();
    const auto report = cross_validate(data, prior, cfg, threshold, opts);
    write_or_print(out_path, cv_report_to_json(report, cfg, prior, threshold, seed, data.k_folds), out);
    return report;
}

void run_cv(const CvArgs& a, std::ostream& out) {
    if (a.dataset.empty()) {
        throw ValidationError("cv: --dataset is required");
    }
    auto data = load_dataset(a.dataset);
    if (a.k_folds) {
        data.k_folds = *a.k_folds;
    }
    run_cv_on(data, a.model, a.threshold, a.seed, a.out, out);
}

std::vector<double> split_numbers(const std::string& text, char sep) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ValidationError("cannot parse number '" + item + "' in '" + text + "'");
        }
    }
    return values;
}

void run_heatmap(const HeatmapArgs& a, std::ostream& out) {
    if (a.out.empty()) {
        throw ValidationError("heatmap: --out is required");
    }
    const auto b = split_numbers(a.bounds, ',');
    if (b.size() != 4) {
        throw ValidationError("heatmap: --bounds needs bmin,pmin,bmax,pmax");
    }
    const auto r = split_numbers(a.res, 'x');
    if (r.size() != 2 || r[0] != static_cast<double>(static_cast<long>(r[0])) ||
        r[1] != static_cast<double>(static_cast<long>(r[1])) || r[0] < 0 || r[1] < 0) {
        throw ValidationError("heatmap: --res needs NxM with integer N, M");
    }
    const GridBounds bounds{b[0], b[1], b[2], b[3]};
    const auto nb = static_cast<std::size_t>(r[0]);
    const auto np = static_cast<std::size_t>(r[1]);
    validate_grid(bounds, nb, np);
    const auto model = load_model(a.model);
    const auto grid = intensity_grid(model.posterior(), bounds, nb, np);
    io::write_text(fs::path(a.out) / "heatmap.csv", grid_to_csv(grid));
    io::write_text(fs::path(a.out) / "heatmap.json", grid_sidecar_json(grid) + "\n");
    out << "wrote " << (fs::path(a.out) / "heatmap.csv").string() << " (" << nb << "x" << np << ")\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian topological classification of 1-D signals", "topobayes"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write synthetic band-limited signals and a signal manifest");
    generate->add_option("--band", gen.bands, "Band(s): alpha, beta (repeat or comma-separate)")->delimiter(',');
    generate->add_option("--n", gen.n, "Signals per band");
    generate->add_option("--duration", gen.duration, "Seconds per signal");
    generate->add_option("--rate", gen.rate, "Sample rate in Hz");
    generate->add_option("--snr", gen.snr, "Additive white noise SNR in dB (omit for clean signals)");
    generate->add_option("--seed", gen.seed, "Base seed");
    generate->add_option("--k-folds", gen.k_folds, "k_folds recorded in the manifest");
    generate->add_option("--out", gen.out, "Output directory")->required();

    PdArgs pd;
    auto* pdcmd = app.add_subcommand("pd", "Sublevel-set persistence diagrams (tilted) of signals");
    pdcmd->add_option("inputs", pd.inputs, "Signal files (.csv or .json)");
    pdcmd->add_option("--manifest", pd.manifest, "Signal manifest written by generate");
    pdcmd->add_option("--rate", pd.rate, "Sample rate for CSV inputs");
    pdcmd->add_option("--out", pd.out, "Output directory (stdout for a single input when omitted)");

    FitArgs fit;
    auto* fitcmd = app.add_subcommand("fit", "Fit posterior class models");
    fitcmd->add_option("--dataset", fit.dataset, "Dataset manifest");
    fitcmd->add_option("diagrams", fit.diagrams, "Diagram files (with --label)");
    fitcmd->add_option("--label", fit.label, "Class label to fit");
    add_model_options(fitcmd, fit.model);
    fitcmd->add_option("--out", fit.out, "Output directory for model_<label>.json")->required();

    ClassifyArgs cls;
    auto* clscmd = app.add_subcommand("classify", "Classify diagrams by pairwise Bayes-factor voting");
    clscmd->add_option("--model", cls.models, "Class model file (repeat, K >= 2)")
        ->required()
        ->allow_extra_args(false);
    clscmd->add_option("diagrams", cls.diagrams, "Diagram files")->required();
    clscmd->add_option("--threshold", cls.threshold, "Bayes factor threshold c");
    clscmd->add_option("--out", cls.out, "Report path (stdout when omitted)");

    CvArgs cv;
    auto* cvcmd = app.add_subcommand("cv", "Stratified k-fold cross validation");
    cvcmd->add_option("--dataset", cv.dataset, "Dataset manifest")->required();
    add_model_options(cvcmd, cv.model);
    cvcmd->add_option("--k-folds", cv.k_folds, "Override the manifest's k_folds");
    cvcmd->add_option("--threshold", cv.threshold, "Bayes factor threshold c");
    cvcmd->add_option("--seed", cv.seed, "Fold shuffle seed");
    cvcmd->add_option("--out", cv.out, "Report path (stdout when omitted)");

    HeatmapArgs hm;
    auto* hmcmd = app.add_subcommand("heatmap", "Scaled intensity grid of a model");
    hmcmd->add_option("--model", hm.model, "Class model file")->required();
    hmcmd->add_option("--bounds", hm.bounds, "bmin,pmin,bmax,pmax");
    hmcmd->add_option("--res", hm.res, "Resolution NxM (birth x persistence)");
    hmcmd->add_option("--out", hm.out, "Output directory")->required();

    GenerateArgs pgen;
    ModelArgs pmodel;
    double pthreshold = 1.0;
    std::uint64_t pfold_seed = 0;
    auto* pipe = app.add_subcommand("pipeline", "generate -> pd -> cv in one run");
    pipe->add_option("--band", pgen.bands, "Band(s)")->delimiter(',');
    pipe->add_option("--n", pgen.n, "Signals per band");
    pipe->add_option("--duration", pgen.duration, "Seconds per signal");
    pipe->add_option("--rate", pgen.rate, "Sample rate in Hz");
    pipe->add_option("--snr", pgen.snr, "SNR in dB");
    pipe->add_option("--seed", pgen.seed, "Signal seed (folds use --fold-seed)");
    pipe->add_option("--fold-seed", pfold_seed, "Fold shuffle seed");
    pipe->add_option("--k-folds", pgen.k_folds, "Number of folds");
    pipe->add_option("--threshold", pthreshold, "Bayes factor threshold c");
    add_model_options(pipe, pmodel);
    pipe->add_option("--out", pgen.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }

    try {
        if (*generate) {
            const auto manifest = run_generate(gen);
            out << "wrote " << manifest["entries"].size() << " signals to " << gen.out << '\n';
        } else if (*pdcmd) {
            if (pd.inputs.empty() == pd.manifest.empty()) {
                throw ValidationError("pd: give either signal files or --manifest");
            }
            return run_pd(pd, out, err);
        } else if (*fitcmd) {
            if (fit.dataset.empty() == fit.diagrams.empty()) {
                throw ValidationError("fit: give either --dataset or diagram files");
            }
            run_fit(fit, out);
        } else if (*clscmd) {
            run_classify(cls, out);
        } else if (*cvcmd) {
            run_cv(cv, out);
        } else if (*hmcmd) {
            run_heatmap(hm, out);
        } else if (*pipe) {
            run_generate(pgen);
            PdArgs p;
            p.manifest = (fs::path(pgen.out) / "signals.json").string();
            p.out = pgen.out;
            const int code = run_pd(p, out, err);
            if (code != kOk) {
                return code;
            }
            auto data = load_dataset(fs::path(pgen.out) / "dataset.json");
            const auto report = run_cv_on(data, pmodel, pthreshold, pfold_seed,
                                          (fs::path(pgen.out) / "cv_report.json").string(), out);
            out << "accuracy " << report.accuracy << '\n';
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kOk;
}

} // namespace topobayes::cli
