#include "steerbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "steerbench/beta_math.hpp"
#include "steerbench/errors.hpp"

namespace steerbench {

namespace {

constexpr double kQuantileTolerance = 1e-12;

void require_finite(double alpha, double beta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha <= 0.0 || beta <= 0.0)
        throw Error("beta parameters must be finite and positive, got alpha=" +
                    std::to_string(alpha) + " beta=" + std::to_string(beta));
}

} // namespace

Distribution::Distribution(const BetaProfile& profile) {
    require_finite(profile.alpha, profile.beta);
    components_.push_back({profile.alpha, profile.beta, 1.0});
}

Distribution::Distribution(const ProfileAggregate& aggregate) {
    if (aggregate.components.empty()) throw Error("aggregate carries no component profiles");
    if (aggregate.weights.size() != aggregate.components.size())
        throw Error("aggregate weights do not match its components");
    double total = 0.0;
    for (std::size_t i = 0; i < aggregate.components.size(); ++i) {
        const BetaProfile& p = aggregate.components[i];
        require_finite(p.alpha, p.beta);
        const double w = aggregate.weights[i];
        if (!std::isfinite(w) || w < 0.0) throw Error("mixture weights must be non-negative");
        total += w;
        components_.push_back({p.alpha, p.beta, w});
    }
    if (!(total > 0.0)) throw Error("mixture weights must not all be zero");
    for (Component& c : components_) c.weight /= total;
}

double Distribution::cdf(double x) const {
    double value = 0.0;
    for (const Component& c : components_) value += c.weight * beta_cdf(c.alpha, c.beta, x);
    return value;
}

double Distribution::pdf(double x) const {
    double value = 0.0;
    for (const Component& c : components_) value += c.weight * beta_pdf(c.alpha, c.beta, x);
    return value;
}

namespace {

// Bracketed Newton on a mixture CDF. The bracket [lo, hi] must contain the
// answer; `hint` seeds the first iterate when it lies inside.
double invert_cdf(const Distribution& dist, double q, double lo, double hi, double hint) {
    double x = (hint > lo && hint < hi) ? hint : 0.5 * (lo + hi);
    for (int iteration = 0; iteration < 200; ++iteration) {
        const double f = dist.cdf(x) - q;
        if (std::abs(f) <= kQuantileTolerance) return x;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        if (hi - lo <= 1e-16) return 0.5 * (lo + hi);
        const double slope = dist.pdf(x);
        double next = slope > 1e-12 ? x - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

} // namespace

double Distribution::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw Error("quantile argument must lie in (0, 1)");
    return invert_cdf(*this, q, 0.0, 1.0, 0.5);
}

std::vector<double> Distribution::quantile_grid(int resolution) const {
    if (resolution < 1) throw Error("quantile grid resolution must be positive");
    std::vector<double> grid(static_cast<std::size_t>(resolution));
    double lower = 0.0;
    double hint = 0.5;
    for (int j = 0; j < resolution; ++j) {
        const double q = (j + 0.5) / resolution;
        const double x = invert_cdf(*this, q, lower, 1.0, hint);
        grid[static_cast<std::size_t>(j)] = x;
        lower = x;
        hint = x; // quantiles are increasing; the previous one seeds the next
    }
    return grid;
}

double beta_cdf(const BetaProfile& profile, double x) {
    return beta_cdf(profile.alpha, profile.beta, x);
}

double beta_quantile(const BetaProfile& profile, double q) {
    return beta_quantile(profile.alpha, profile.beta, q);
}

double wasserstein(const Distribution& p, const Distribution& q, int resolution) {
    if (resolution < 1) throw Error("wasserstein resolution must be positive");
    const std::vector<double> gp = p.quantile_grid(resolution);
    const std::vector<double> gq = q.quantile_grid(resolution);
    double sum = 0.0;
    for (int j = 0; j < resolution; ++j)
        sum += std::abs(gp[static_cast<std::size_t>(j)] - gq[static_cast<std::size_t>(j)]);
    return sum / resolution;
}

SteerabilityIndex steerability_index_from(double capacity, double residual, double normalizer,
                                          Valence direction, int budget_k,
                                          std::string dimension, int experiment_trial) {
    if (!(normalizer > 0.0))
        throw Error("degenerate profiling sample: the maximally steered marginals coincide, "
                    "so the steerability index is undefined");
    SteerabilityIndex index;
    index.direction = direction;
    index.budget_k = budget_k;
    index.dimension = std::move(dimension);
    index.experiment_trial = experiment_trial;
    index.capacity = capacity;
    index.residual = residual;
    index.normalizer = normalizer;
    index.value = (capacity - residual) / normalizer;
    return index;
}

SteerabilityIndex steerability_index(const Distribution& base, const Distribution& steered,
                                     const Distribution& max_pos, const Distribution& max_neg,
                                     Valence direction, int budget_k, std::string dimension,
                                     int experiment_trial, int resolution) {
    const Distribution& target = direction == Valence::positive ? max_pos : max_neg;
    return steerability_index_from(wasserstein(base, target, resolution),
                                   wasserstein(steered, target, resolution),
                                   wasserstein(max_pos, max_neg, resolution), direction,
                                   budget_k, std::move(dimension), experiment_trial);
}

SteerabilityCurve build_curve(const std::vector<SteerabilityIndex>& indices,
                              const std::vector<int>& k_schedule, bool gap_tolerant) {
    if (indices.empty()) throw Error("cannot build a curve from zero indices");
    for (std::size_t i = 1; i < k_schedule.size(); ++i)
        if (k_schedule[i] <= k_schedule[i - 1])
            throw Error("budget schedule must be strictly increasing");

    SteerabilityCurve curve;
    curve.dimension = indices.front().dimension;
    curve.direction = indices.front().direction;

    std::map<int, std::map<int, double>> by_budget; // budget -> trial -> value
    std::set<int> trials_seen;
    for (const SteerabilityIndex& index : indices) {
        if (index.dimension != curve.dimension || index.direction != curve.direction)
            throw Error("curve indices must all share one (dimension, direction)");
        auto [it, inserted] =
            by_budget[index.budget_k].emplace(index.experiment_trial, index.value);
        if (!inserted)
            throw Error("duplicate index for budget " + std::to_string(index.budget_k) +
                        ", trial " + std::to_string(index.experiment_trial));
        trials_seen.insert(index.experiment_trial);
    }

    std::vector<std::string> gaps;
    for (int k : k_schedule) {
        const auto group = by_budget.find(k);
        if (group == by_budget.end() || group->second.empty()) {
            if (!gap_tolerant) gaps.push_back("k=" + std::to_string(k) + ": no indices");
            continue;
        }
        if (!gap_tolerant) {
            for (int trial : trials_seen)
                if (!group->second.count(trial))
                    gaps.push_back("k=" + std::to_string(k) + ": missing trial " +
                                   std::to_string(trial));
        }
        double mean = 0.0;
        for (const auto& [trial, value] : group->second) mean += value;
        mean /= static_cast<double>(group->second.size());
        double variance = 0.0;
        for (const auto& [trial, value] : group->second)
            variance += (value - mean) * (value - mean);
        variance /= static_cast<double>(group->second.size());
        curve.points.push_back({k, mean, std::sqrt(variance)});
    }
    if (!gaps.empty()) {
        std::ostringstream message;
        message << "incomplete curve for " << curve.dimension << "/"
                << to_string(curve.direction) << ":";
        for (const std::string& gap : gaps) message << ' ' << gap << ';';
        throw Error(message.str());
    }
    return curve;
}

const std::string& CategoryMap::category_of(const std::string& dimension) const {
    static const std::string other = "other";
    const auto it = dimension_to_category.find(dimension);
    return it == dimension_to_category.end() ? other : it->second;
}

CategoryMap category_map_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("category map is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("category map must be a JSON object");
    CategoryMap map;
    for (const auto& [category, members] : doc.items()) {
        if (!members.is_array())
            throw ConfigError("category '" + category + "' must map to an array of dimensions");
        for (const auto& member : members) {
            const std::string dimension = member.get<std::string>();
            const auto [it, inserted] = map.dimension_to_category.emplace(dimension, category);
            if (!inserted && it->second != category)
                throw ConfigError("dimension '" + dimension + "' is assigned to both '" +
                                  it->second + "' and '" + category + "'");
        }
    }
    return map;
}

OneShotSummary one_shot_summary(const std::vector<SteerabilityCurve>& curves,
                                const CategoryMap& categories,
                                const std::vector<std::string>& category_filter,
                                SummaryAveraging averaging) {
    struct DimValues {
        std::optional<double> positive;
        std::optional<double> negative;
    };
    std::map<std::string, std::map<std::string, DimValues>> by_category;
    for (const SteerabilityCurve& curve : curves) {
        const auto point = std::find_if(curve.points.begin(), curve.points.end(),
                                        [](const CurvePoint& p) { return p.budget_k == 1; });
        if (point == curve.points.end())
            throw Error("curve for " + curve.dimension + "/" + to_string(curve.direction) +
                        " has no k=1 point; one-shot summary needs budget 1");
        DimValues& slot = by_category[categories.category_of(curve.dimension)][curve.dimension];
        if (curve.direction == Valence::positive)
            slot.positive = point->mean;
        else
            slot.negative = point->mean;
    }

    std::vector<std::string> report_order;
    if (category_filter.empty()) {
        for (const auto& [category, dims] : by_category) report_order.push_back(category);
    } else {
        report_order = category_filter;
    }

    OneShotSummary summary;
    double dim_pos_sum = 0.0, dim_neg_sum = 0.0;
    int dim_pos_n = 0, dim_neg_n = 0, dims_total = 0;
    for (const std::string& category : report_order) {
        const auto members = by_category.find(category);
        if (members == by_category.end() || members->second.empty()) {
            summary.warnings.push_back("category '" + category +
                                       "' has no benchmarked dimensions; omitted");
            continue;
        }
        OneShotRow row;
        row.category = category;
        row.dimension_count = static_cast<int>(members->second.size());
        double pos = 0.0, neg = 0.0;
        int pos_n = 0, neg_n = 0;
        for (const auto& [dimension, values] : members->second) {
            if (values.positive) {
                pos += *values.positive;
                ++pos_n;
                dim_pos_sum += *values.positive;
                ++dim_pos_n;
            }
            if (values.negative) {
                neg += *values.negative;
                ++neg_n;
                dim_neg_sum += *values.negative;
                ++dim_neg_n;
            }
        }
        row.positive = pos_n > 0 ? pos / pos_n : 0.0;
        row.negative = neg_n > 0 ? neg / neg_n : 0.0;
        dims_total += row.dimension_count;
        summary.rows.push_back(std::move(row));
    }

    summary.average.category = "average";
    summary.average.dimension_count = dims_total;
    if (averaging == SummaryAveraging::over_categories) {
        double pos = 0.0, neg = 0.0;
        for (const OneShotRow& row : summary.rows) {
            pos += row.positive;
            neg += row.negative;
        }
        const auto n = static_cast<double>(summary.rows.size());
        summary.average.positive = summary.rows.empty() ? 0.0 : pos / n;
        summary.average.negative = summary.rows.empty() ? 0.0 : neg / n;
    } else {
        summary.average.positive = dim_pos_n > 0 ? dim_pos_sum / dim_pos_n : 0.0;
        summary.average.negative = dim_neg_n > 0 ? dim_neg_sum / dim_neg_n : 0.0;
    }
    return summary;
}

std::vector<BaselineRow> baseline_summary(
    const std::map<std::string, ProfileAggregate>& baselines) {
    std::vector<BaselineRow> rows;
    rows.reserve(baselines.size());
    for (const auto& [dimension, aggregate] : baselines)
        rows.push_back({dimension, aggregate.mean, aggregate.stddev()});
    return rows;
}

} // namespace steerbench
