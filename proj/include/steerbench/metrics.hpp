#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steerbench/persona.hpp"
#include "steerbench/profile.hpp"

namespace steerbench {

inline constexpr int kDefaultWassersteinResolution = 2048;

// A finite beta mixture on [0,1] — the common shape of single profiles and
// trial aggregates, and the only thing the distance code needs to know about.
class Distribution {
public:
    Distribution(const BetaProfile& profile);        // NOLINT(google-explicit-constructor)
    Distribution(const ProfileAggregate& aggregate); // NOLINT(google-explicit-constructor)

    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double q) const; // |cdf(result) - q| <= 1e-10

    // Quantiles at the midpoint nodes (j + 0.5)/resolution, j = 0..res-1,
    // computed in one increasing sweep so each inversion starts from the
    // previous bracket.
    std::vector<double> quantile_grid(int resolution) const;

private:
    struct Component {
        double alpha;
        double beta;
        double weight;
    };
    std::vector<Component> components_;
};

double beta_cdf(const BetaProfile& profile, double x);
double beta_quantile(const BetaProfile& profile, double q);

// Order-1 Wasserstein distance on [0,1] via the quantile-function integral,
// midpoint rule on `resolution` uniform nodes.
double wasserstein(const Distribution& p, const Distribution& q,
                   int resolution = kDefaultWassersteinResolution);

struct SteerabilityIndex {
    double value = 0.0;
    Valence direction = Valence::positive;
    int budget_k = 0;
    std::string dimension;
    int experiment_trial = 0;
    // value = (capacity - residual) / normalizer
    double capacity = 0.0;   // W(base, maximal marginal in `direction`)
    double residual = 0.0;   // W(steered, same marginal)
    double normalizer = 0.0; // W(maximal positive, maximal negative)
};

// gamma_dir = (W(base, max_dir) - W(steered, max_dir)) / W(max_pos, max_neg).
// Throws on a zero normalizer (degenerate profiling sample: all confidences
// at 0.5 leave both maximal marginals equal to the prior).
SteerabilityIndex steerability_index(const Distribution& base, const Distribution& steered,
                                     const Distribution& max_pos, const Distribution& max_neg,
                                     Valence direction, int budget_k = 0,
                                     std::string dimension = {}, int experiment_trial = 0,
                                     int resolution = kDefaultWassersteinResolution);

// Same result from precomputed distances, for callers that share the
// capacity and normalizer across many budgets.
SteerabilityIndex steerability_index_from(double capacity, double residual, double normalizer,
                                          Valence direction, int budget_k,
                                          std::string dimension, int experiment_trial);

struct CurvePoint {
    int budget_k = 0;
    double mean = 0.0;
    double std = 0.0; // population dispersion across experiment trials
};

struct SteerabilityCurve {
    std::string dimension;
    Valence direction = Valence::positive;
    std::vector<CurvePoint> points; // strictly increasing budget_k
};

// Collapses per-trial indices (all sharing dimension and direction) to
// mean +- std per budget. Every (budget, trial) cell must be present unless
// gap_tolerant, in which case incomplete budgets are dropped.
SteerabilityCurve build_curve(const std::vector<SteerabilityIndex>& indices,
                              const std::vector<int>& k_schedule, bool gap_tolerant = false);

struct CategoryMap {
    std::map<std::string, std::string> dimension_to_category;

    // Unmapped dimensions fall into "other".
    const std::string& category_of(const std::string& dimension) const;
};

CategoryMap category_map_from_json(const std::string& json_text);

enum class SummaryAveraging {
    over_categories, // "average" row = mean of the category rows
    over_dimensions, // "average" row = mean over all member dimensions
};

struct OneShotRow {
    std::string category;
    double positive = 0.0;
    double negative = 0.0;
    int dimension_count = 0;
};

struct OneShotSummary {
    std::vector<OneShotRow> rows; // ordered by the filter, else by category name
    OneShotRow average;           // category = "average"
    std::vector<std::string> warnings;
};

// Mean k=1 index per (category, direction). Curves must contain a k=1 point.
// category_filter selects and orders the reported categories (empty ->
// every category that appears).
OneShotSummary one_shot_summary(const std::vector<SteerabilityCurve>& curves,
                                const CategoryMap& categories,
                                const std::vector<std::string>& category_filter = {},
                                SummaryAveraging averaging = SummaryAveraging::over_categories);

struct BaselineRow {
    std::string dimension;
    double mean = 0.0;
    double std = 0.0;
};

// Mixture mean and std per dimension, ordered by dimension name.
std::vector<BaselineRow> baseline_summary(const std::map<std::string, ProfileAggregate>& baselines);

} // namespace steerbench
