#pragma once

#include "topobayes/filtration.hpp"
#include "topobayes/intensity.hpp"
#include "topobayes/posterior.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace topobayes {

/// Fitted posterior intensity of one class. `lambda()` is always the total
/// mass of `posterior()`.
class ClassModel {
public:
    ClassModel(std::string label, GaussianMixtureIntensity posterior);

    const std::string& label() const { return label_; }
    const GaussianMixtureIntensity& posterior() const { return posterior_; }
    double lambda() const { return lambda_; }

private:
    std::string label_;
    GaussianMixtureIntensity posterior_;
    double lambda_;
};

/// Poisson point-process log density of a diagram:
/// -lambda - log(|D|!) + sum_d log intensity(d). -inf when some point has
/// zero intensity.
double diagram_log_density(const PersistenceDiagram& d, const ClassModel& model);

/// log BF^{i,j} = log p(D | i) - log p(D | j); defined as 0 when both
/// densities are zero.
double log_bayes_factor(const PersistenceDiagram& d, const ClassModel& model_i, const ClassModel& model_j);

/// Throws ValidationError for an empty training set.
ClassModel fit_class_model(std::span<const PersistenceDiagram> training, const GaussianMixtureIntensity& prior,
                           const PosteriorConfig& cfg, std::string label, const PruneOptions& prune = {});

struct Classification {
    std::string label;
    std::map<std::string, int> votes;
    std::map<std::string, double> log_densities;
};

/// Pairwise Bayes-factor voting over the models taken in label order: for
/// each pair i < j the vote goes to i when log BF^{i,j} > log c, to j when
/// it is < log c, and nobody when equal. Ties in votes fall to the larger
/// log density, then to the smaller label. Requires K >= 2 distinct labels
/// and threshold_c > 0.
Classification classify(const PersistenceDiagram& d, std::span<const ClassModel> models, double threshold_c = 1.0);

struct LabeledDiagram {
    PersistenceDiagram diagram;
    std::string label;
};

struct LabeledDataset {
    std::vector<LabeledDiagram> entries;
    int k_folds = 10;

    std::vector<std::string> labels() const; ///< sorted, unique
};

/// Stratified fold index per entry: each class is shuffled with a seed
/// derived from `seed` and dealt round-robin into k folds. Throws
/// ValidationError when a class has fewer than k entries.
std::vector<int> assign_folds(const LabeledDataset& data, std::uint64_t seed);

struct CvOptions {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    PruneOptions prune{};
    bool keep_models = false; ///< fill CvReport::models
};

struct CvReport {
    double accuracy = 0.0;            ///< mean of the per-fold accuracies
    std::vector<double> per_fold;
    std::vector<std::string> labels;  ///< row/column order of `confusion`
    std::vector<std::vector<std::size_t>> confusion; ///< [true][predicted]
    std::vector<int> fold_of;         ///< fold index per dataset entry
    std::vector<std::string> predicted; ///< predicted label per dataset entry
    std::vector<std::vector<ClassModel>> models; ///< per fold, when requested
};

CvReport cross_validate(const LabeledDataset& data, const GaussianMixtureIntensity& prior, const PosteriorConfig& cfg,
                        double threshold_c = 1.0, const CvOptions& options = {});

std::string model_to_json(const ClassModel& model);
ClassModel model_from_json(const std::string& text);
void save_model(const ClassModel& model, const std::filesystem::path& path);
ClassModel load_model(const std::filesystem::path& path);

/// Manifest {"k_folds": k, "entries": [{"diagram": path, "label": l}, ...]};
/// diagram paths are relative to the manifest's directory.
LabeledDataset load_dataset(const std::filesystem::path& manifest);

std::string classification_to_json(const Classification& c);
std::string cv_report_to_json(const CvReport& report, const PosteriorConfig& cfg,
                              const GaussianMixtureIntensity& prior, double threshold_c, std::uint64_t seed,
                              int k_folds);

} // namespace topobayes
