#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lyapsim/model.hpp"
#include "lyapsim/random.hpp"
#include "lyapsim/sampling.hpp"

namespace lyapsim {

/// On-the-fly first passage below `level` after time `after`, checked at every
/// internal grid point (before and after each jump), not only retained ones.
struct PassageWatch {
    double level = 1.0;
    double after = 0.0;
};

struct SimulationGrid {
    double horizon = 1.0;
    double dt = 1e-3;
    bool jump_adapted = true;
    /// Retain every k-th base grid point (and, for k = 1, every jump time).
    int record_every = 1;
    double small_jump_epsilon = 0.01;
    /// Drift sub-steps keep |a| h <= max_relative_drift * max(|x|, 1).
    double max_relative_drift = 0.01;
    double overflow_guard = 1e300;
    bool keep_jump_log = true;
    std::vector<PassageWatch> watches;
    /// Replaces the sampled large jumps (forced-jump experiments).
    std::optional<std::vector<JumpEvent>> scripted_jumps;

    void validate() const;
    std::size_t steps() const;
    double time_at(std::size_t k) const;
};

/// Big-jump localisation: the path freezes at X_{s-} at the first jump with
/// |z| > R^{1-eps}.
struct TruncationPolicy {
    double R = 0.0;
    double epsilon = 0.5;
    bool active = false;

    double threshold() const;
    void validate() const;
};

struct Path {
    std::uint64_t stream_id = 0;
    int dimension = 1;
    std::vector<double> times;
    std::vector<double> states;  ///< row-major, times.size() x dimension
    std::vector<JumpEvent> jump_log;
    bool exploded = false;
    std::optional<double> exploded_at;
    std::optional<double> truncated_at;
    std::uint64_t clamp_events = 0;
    std::vector<std::optional<double>> passages;  ///< one per grid watch

    std::size_t size() const { return times.size(); }
    std::span<const double> state(std::size_t i) const {
        return {states.data() + i * dimension, static_cast<std::size_t>(dimension)};
    }
    double norm_at(std::size_t i) const;
    /// Index of the retained time closest to t (within half a step), if any.
    std::optional<std::size_t> index_of(double t, double tolerance) const;
};

Path simulate_path(const ModelSpec& model, const SimulationGrid& grid, std::span<const double> x0,
                   const RandomStream& stream, const TruncationPolicy& truncation = {});

using InitialLaw = std::function<Vec(RandomStream&)>;
InitialLaw fixed_start(Vec x0);

struct PathBatch {
    std::uint64_t base_seed = 0;
    SimulationGrid grid;
    std::vector<Path> paths;

    std::size_t exploded() const;
};

/// Paths with stream ids 0..n_paths-1, independent of the worker count.
PathBatch simulate_batch(const ModelSpec& model, const SimulationGrid& grid, const InitialLaw& x0_law,
                         std::size_t n_paths, std::uint64_t base_seed, const TruncationPolicy& truncation = {},
                         unsigned workers = 1);

struct Passage {
    double tau = 0.0;
    double delta = 0.0;  ///< tau - after
};
/// First retained time t >= after with |X_t| <= R.
std::optional<Passage> detect_passage_time(const Path& path, double R, double after = 0.0);

/// Closed-form flow of dx = -r(x) dt for the storage rate r over a duration s.
double storage_flow(double kappa, double x, double s);

/// Event-driven exact storage simulation; jumps come from the lane-1 substream in
/// the same order as simulate_path uses, so both see identical jumps. Retains
/// the base grid k * record_dt and every jump time.
Path simulate_storage_exact(double kappa, double alpha, double x0, double horizon, const RandomStream& stream,
                            double record_dt);
Path simulate_storage_exact(double kappa, double x0, double horizon, const std::vector<JumpEvent>& jumps,
                            double record_dt);

}  // namespace lyapsim
