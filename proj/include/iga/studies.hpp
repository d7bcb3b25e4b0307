#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "iga/ieti.hpp"
#include "iga/korn.hpp"

namespace iga {

/// One experiment run. Lists allow parameter sweeps; scalar studies use the
/// first entry.
struct ExperimentConfig {
    std::string domain = "cantilever"; // cantilever | strip | geometry file path
    std::vector<int> patch_counts = {4}; // K (columns for the strip generator)
    int strip_rows = 1;
    double strip_length = -1.0; // <= 0 means unit-square patches (length = K)
    std::vector<int> degrees = {2};
    std::vector<int> levels = {2};
    double mu = 1.0;
    std::vector<double> lambdas = {1.0};
    PrimalMode primal = PrimalMode::corners;
    double tol = 1e-6;
    unsigned seed = 42;
    std::string study = "solve";
    double load = 1e-5;
    int dense_cap = kDenseEigCap;
    int max_iterations = 1000;
};

/// Deterministic tabular result: metadata echo plus CSV-ready cells.
struct StudyReport {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    bool operator==(const StudyReport&) const = default;
};

std::string format_number(double value);
std::string to_csv(const StudyReport& report);
StudyReport parse_csv(std::istream& in);

StudyReport run_study(const ExperimentConfig& config);
StudyReport run_solve(const ExperimentConfig& config);
StudyReport run_kappa_table(const ExperimentConfig& config);
StudyReport run_korn_scaling(const ExperimentConfig& config);
StudyReport run_length_independence(const ExperimentConfig& config);
StudyReport run_bending(const ExperimentConfig& config);
StudyReport run_convergence(const ExperimentConfig& config);

/// Domain for one study cell; degree/levels set the displacement space.
MultiPatchDomain make_study_domain(const ExperimentConfig& config, int patches, int degree,
                                   int levels);

/// y-displacement at the far corner of the load-tagged boundary
/// (largest x, then smallest y).
double bending_value(const MultiPatchDomain& domain, const PatchwiseField& field);

/// Flat key=value configuration file; unknown keys are rejected.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

} // namespace iga
