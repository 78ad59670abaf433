#include "topobayes/classifier.hpp"

#include "json_detail.hpp"
#include "topobayes/errors.hpp"
#include "topobayes/io.hpp"
#include "topobayes/parallel.hpp"
#include "topobayes/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace topobayes {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

ClassModel::ClassModel(std::string label, GaussianMixtureIntensity posterior)
    : label_(std::move(label)), posterior_(std::move(posterior)), lambda_(posterior_.total_mass()) {}

double diagram_log_density(const PersistenceDiagram& d, const ClassModel& model) {
    double acc = -model.lambda() - std::lgamma(static_cast<double>(d.size()) + 1.0);
    for (const auto& x : d.points()) {
        const double li = model.posterior().log_eval(x);
        if (li == kNegInf) {
            return kNegInf;
        }
        acc += li;
    }
    return acc;
}

double log_bayes_factor(const PersistenceDiagram& d, const ClassModel& model_i, const ClassModel& model_j) {
    const double li = diagram_log_density(d, model_i);
    const double lj = diagram_log_density(d, model_j);
    if (li == kNegInf && lj == kNegInf) {
        return 0.0;
    }
    return li - lj;
}

ClassModel fit_class_model(std::span<const PersistenceDiagram> training, const GaussianMixtureIntensity& prior,
                           const PosteriorConfig& cfg, std::string label, const PruneOptions& prune) {
    if (training.empty()) {
        throw ValidationError("cannot fit class '" + label + "': empty training set");
    }
    return ClassModel(std::move(label), posterior_intensity(prior, training, cfg, prune));
}

Classification classify(const PersistenceDiagram& d, std::span<const ClassModel> models, double threshold_c) {
    if (models.size() < 2) {
        throw ValidationError("classify needs at least two class models");
    }
    if (!(threshold_c > 0.0) || !std::isfinite(threshold_c)) {
        throw ValidationError("threshold c must be positive and finite");
    }
    std::vector<const ClassModel*> order;
    for (const auto& m : models) {
        order.push_back(&m);
    }
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->label() < b->label(); });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (order[i]->label() == order[i - 1]->label()) {
            throw ValidationError("duplicate class label '" + order[i]->label() + "'");
        }
    }

    Classification out;
    std::vector<double> log_density(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        log_density[i] = diagram_log_density(d, *order[i]);
        out.log_densities[order[i]->label()] = log_density[i];
        out.votes[order[i]->label()] = 0;
    }
    const double log_c = std::log(threshold_c);
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            double lbf = 0.0;
            if (!(log_density[i] == kNegInf && log_density[j] == kNegInf)) {
                lbf = log_density[i] - log_density[j];
            }
            if (lbf > log_c) {
                ++out.votes[order[i]->label()];
            } else if (lbf < log_c) {
                ++out.votes[order[j]->label()];
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < order.size(); ++i) {
        const int vi = out.votes[order[i]->label()];
        const int vb = out.votes[order[best]->label()];
        if (vi > vb || (vi == vb && log_density[i] > log_density[best])) {
            best = i;
        }
    }
    out.label = order[best]->label();
    return out;
}

std::vector<std::string> LabeledDataset::labels() const {
    std::set<std::string> s;
    for (const auto& e : entries) {
        s.insert(e.label);
    }
    return {s.begin(), s.end()};
}

std::vector<int> assign_folds(const LabeledDataset& data, std::uint64_t seed) {
    if (data.k_folds < 1) {
        throw ValidationError("k_folds must be a positive integer");
    }
    const auto labels = data.labels();
    std::vector<int> fold_of(data.entries.size(), -1);
    for (std::size_t c = 0; c < labels.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.entries.size(); ++i) {
            if (data.entries[i].label == labels[c]) {
                members.push_back(i);
            }
        }
        if (members.size() < static_cast<std::size_t>(data.k_folds)) {
            throw ValidationError("class '" + labels[c] + "' has " + std::to_string(members.size()) +
                                  " entries, fewer than k_folds = " + std::to_string(data.k_folds));
        }
        std::mt19937_64 rng(mix_seed(seed, c));
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t pos = 0; pos < members.size(); ++pos) {
            fold_of[members[pos]] = static_cast<int>(pos % static_cast<std::size_t>(data.k_folds));
        }
    }
    return fold_of;
}

CvReport cross_validate(const LabeledDataset& data, const GaussianMixtureIntensity& prior, const PosteriorConfig& cfg,
                        double threshold_c, const CvOptions& options) {
    cfg.validate();
    const auto labels = data.labels();
    if (labels.size() < 2) {
        throw ValidationError("cross validation needs at least two classes");
    }
    const auto fold_of = assign_folds(data, options.seed);
    const auto k = static_cast<std::size_t>(data.k_folds);

    std::vector<std::string> predicted(data.entries.size());
    std::vector<std::vector<ClassModel>> fold_models(options.keep_models ? k : 0);
    parallel_for(k, options.threads, [&](std::size_t fold) {
        std::vector<ClassModel> models;
        for (const auto& label : labels) {
            std::vector<PersistenceDiagram> train;
            for (std::size_t i = 0; i < data.entries.size(); ++i) {
                if (fold_of[i] != static_cast<int>(fold) && data.entries[i].label == label) {
                    train.push_back(data.entries[i].diagram);
                }
            }
            models.push_back(fit_class_model(train, prior, cfg, label, options.prune));
        }
        for (std::size_t i = 0; i < data.entries.size(); ++i) {
            if (fold_of[i] == static_cast<int>(fold)) {
                predicted[i] = classify(data.entries[i].diagram, models, threshold_c).label;
            }
        }
        if (options.keep_models) {
            fold_models[fold] = std::move(models);
        }
    });

    CvReport report;
    report.labels = labels;
    report.fold_of = fold_of;
    report.predicted = predicted;
    report.models = std::move(fold_models);
    report.confusion.assign(labels.size(), std::vector<std::size_t>(labels.size(), 0));
    std::vector<std::size_t> tested(k, 0);
    std::vector<std::size_t> correct(k, 0);
    auto label_index = [&](const std::string& l) {
        return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), l) - labels.begin());
    };
    for (std::size_t i = 0; i < data.entries.size(); ++i) {
        const auto fold = static_cast<std::size_t>(fold_of[i]);
        ++tested[fold];
        if (predicted[i] == data.entries[i].label) {
            ++correct[fold];
        }
        ++report.confusion[label_index(data.entries[i].label)][label_index(predicted[i])];
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
        const double acc = static_cast<double>(correct[f]) / static_cast<double>(tested[f]);
        report.per_fold.push_back(acc);
        sum += acc;
    }
    report.accuracy = sum / static_cast<double>(k);
    return report;
}

std::string model_to_json(const ClassModel& model) {
    nlohmann::json doc;
    doc["label"] = model.label();
    doc["lambda"] = model.lambda();
    doc["posterior"] = detail::mixture_to_jvalue(model.posterior());
    return doc.dump();
}

ClassModel model_from_json(const std::string& text) {
    const auto doc = detail::parse_json(text, "model");
    if (!doc.is_object() || !doc.contains("label") || !doc["label"].is_string() || !doc.contains("posterior")) {
        throw ValidationError("malformed model JSON: expected {\"label\", \"lambda\", \"posterior\"}");
    }
    ClassModel model(doc["label"].get<std::string>(), detail::mixture_from_jvalue(doc["posterior"]));
    if (doc.contains("lambda")) {
        if (!doc["lambda"].is_number()) {
            throw ValidationError("malformed model JSON: lambda is not a number");
        }
        const double stored = doc["lambda"].get<double>();
        if (std::abs(stored - model.lambda()) > 1e-12 * std::max(1.0, model.lambda())) {
            throw ValidationError("model JSON: lambda does not match the posterior's total mass");
        }
    }
    return model;
}

void save_model(const ClassModel& model, const std::filesystem::path& path) {
    io::write_text(path, model_to_json(model) + "\n");
}

ClassModel load_model(const std::filesystem::path& path) {
    const std::string text = io::read_text(path);
    try {
        return model_from_json(text);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

LabeledDataset load_dataset(const std::filesystem::path& manifest) {
    const auto doc = detail::parse_json(io::read_text(manifest), "dataset manifest");
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
        throw ValidationError(manifest.string() + ": malformed dataset manifest: missing \"entries\" array");
    }
    LabeledDataset data;
    if (doc.contains("k_folds")) {
        if (!doc["k_folds"].is_number_integer() || doc["k_folds"].get<int>() < 1) {
            throw ValidationError(manifest.string() + ": k_folds must be a positive integer");
        }
        data.k_folds = doc["k_folds"].get<int>();
    }
    const auto base = manifest.parent_path();
    for (const auto& e : doc["entries"]) {
        if (!e.is_object() || !e.contains("diagram") || !e["diagram"].is_string() || !e.contains("label") ||
            !e["label"].is_string()) {
            throw ValidationError(manifest.string() + ": each entry needs string \"diagram\" and \"label\"");
        }
        std::filesystem::path p = e["diagram"].get<std::string>();
        if (p.is_relative()) {
            p = base / p;
        }
        data.entries.push_back({load_diagram(p), e["label"].get<std::string>()});
    }
    return data;
}

std::string classification_to_json(const Classification& c) {
    nlohmann::json doc;
    doc["label"] = c.label;
    doc["votes"] = c.votes;
    nlohmann::json dens = nlohmann::json::object();
    for (const auto& [label, v] : c.log_densities) {
        // JSON has no -inf; null marks a zero density.
        dens[label] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    }
    doc["log_densities"] = std::move(dens);
    return doc.dump();
}

std::string cv_report_to_json(const CvReport& report, const PosteriorConfig& cfg,
                              const GaussianMixtureIntensity& prior, double threshold_c, std::uint64_t seed,
                              int k_folds) {
    nlohmann::json doc;
    doc["accuracy"] = report.accuracy;
    doc["per_fold"] = report.per_fold;
    doc["labels"] = report.labels;
    doc["confusion"] = report.confusion;
    doc["config"] = {{"alpha", cfg.alpha},
                     {"sigma_obs", cfg.sigma_obs},
                     {"clutter", detail::mixture_to_jvalue(cfg.clutter)},
                     {"prior", detail::mixture_to_jvalue(prior)},
                     {"threshold_c", threshold_c},
                     {"k_folds", k_folds}};
    doc["seed"] = seed;
    return doc.dump(2);
}

} // namespace topobayes
