#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyapsim/integrator.hpp"
#include "lyapsim/io.hpp"

namespace lyapsim {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr int kMomBlocks = 32;
/// Inequality checks allow this many standard errors.
inline constexpr double kInequalitySigmas = 3.0;

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    double half_width = 0.0;  ///< 95%
    double lo() const { return value - half_width; }
    double hi() const { return value + half_width; }
};

/// Mean with normal-theory 95% half-width.
Estimate mean_estimate(std::span<const double> sample);
/// Median of kMomBlocks block means (consecutive blocks in input order).
Estimate median_of_means(std::span<const double> sample, int blocks = kMomBlocks);

struct MomentRow {
    double time = 0.0;
    double order = 0.0;
    Estimate mean;
    Estimate mom;
    bool headline_is_mom = false;
    std::size_t n_used = 0;
    std::size_t exploded = 0;
    const Estimate& headline() const { return headline_is_mom ? mom : mean; }
};

struct MomentReport {
    std::vector<MomentRow> rows;
    std::size_t n_paths = 0;
    std::size_t exploded = 0;

    const MomentRow& at(double time, double order) const;
    CsvTable to_csv() const;
};

/// |X_t|^order at retained times. Exploded paths are excluded from the sample
/// and counted. The median-of-means estimate is the headline for orders within
/// 0.5 of `finiteness_boundary`.
MomentReport estimate_moments(const PathBatch& batch, std::span<const double> times, std::span<const double> orders,
                              double finiteness_boundary = std::numeric_limits<double>::infinity());

/// Least-squares slope of log E|X_t|^order against log t with a block-batch 95% CI:
/// the paths are split into kMomBlocks blocks and the slope's standard error is
/// taken from the spread of the per-block slopes, which absorbs the strong
/// correlation between times of the same paths.
struct TrendSlope {
    double slope = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
};

struct SupMoment {
    double sup = 0.0;
    Estimate at_argmax;
    double argmax_time = 0.0;
    TrendSlope trend;
    std::vector<MomentRow> per_time;
};

/// Supremum over the retained times in [t_lo, t_hi] of the per-time estimate,
/// with its trend over the window.
SupMoment estimate_sup_moment(const PathBatch& batch, double t_lo, double t_hi, double order,
                              double finiteness_boundary = std::numeric_limits<double>::infinity());

/// Trend of log E|X_t|^order over the supplied times (t > 0).
TrendSlope moment_trend(const PathBatch& batch, std::span<const double> times, double order);

/// (1/(t - sigma)) int_sigma^t |X_s|^order ds per path (trapezoid on retained times), averaged.
Estimate estimate_cesaro(const PathBatch& batch, double sigma, double t, double order);

struct PassageMoment {
    double order = 0.0;
    Estimate estimate;  ///< lower bound when censoring is present
};

struct TailProbability {
    double threshold = 0.0;
    Estimate probability;  ///< censored paths count as exceedances
};

struct PassageTimeStats {
    double level = 0.0;
    double start = 0.0;
    double resolution = 0.0;  ///< grid step: every delta is known to this accuracy
    std::vector<double> deltas;  ///< observed passages only
    std::size_t n_paths = 0;
    std::size_t censored = 0;
    bool moments_valid = true;  ///< false when more than half of the paths are censored
    std::vector<PassageMoment> moments;
    std::optional<Estimate> exp_moment;
    double exp_rate = 0.0;
    std::vector<TailProbability> tails;

    double censored_fraction() const { return n_paths ? static_cast<double>(censored) / n_paths : 0.0; }
    /// Empirical quantile with censored paths at +inf.
    double quantile(double q) const;
    KeyValues to_kv() const;
};

struct PassageRequest {
    std::vector<double> orders;
    std::optional<double> exp_rate;  ///< E exp(c delta), linear case
    std::vector<double> tail_thresholds;
};

/// delta = tau_R^sigma - sigma for a deterministic start sigma. Uses the
/// on-the-fly grid watch matching (R, sigma) when present, else the retained times.
PassageTimeStats estimate_passage_moments(const PathBatch& batch, double R, double sigma, const PassageRequest& request);

enum class TrendVerdict { bounded, growing, inconclusive };
std::string to_string(TrendVerdict verdict);

struct DivergenceTest {
    TrendVerdict verdict = TrendVerdict::inconclusive;
    TrendSlope trend;
    std::vector<double> windows;
    std::vector<Estimate> window_estimates;  ///< E|X|^q averaged over [W/2, W]
    std::optional<double> oracle_lower_bound;  ///< at the last window, storage preset only
};

/// Window estimates are time averages of the moment over [W/2, W]. growing iff
/// the slope CI lies above 0 and the first and last window CIs are disjoint;
/// bounded iff the slope CI reaches 0 or below; inconclusive otherwise.
/// With a storage-preset `model` the oracle moment lower bound at the last window is attached.
DivergenceTest divergence_trend_test(const PathBatch& batch, std::span<const double> windows, double order,
                                     const ModelSpec* model = nullptr);

/// Retained base-grid times of `grid` inside [lo, hi].
std::vector<double> retained_times(const SimulationGrid& grid, double lo, double hi);

}  // namespace lyapsim
