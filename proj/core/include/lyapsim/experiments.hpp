#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lyapsim/config.hpp"
#include "lyapsim/lyapunov.hpp"
#include "lyapsim/model.hpp"

namespace lyapsim {

inline constexpr int kExitPass = 0;
inline constexpr int kExitAcceptance = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCertification = 3;

enum class ScenarioId {
    sublinear_moments,
    linear_exponential_passage,
    superlinear_uniform,
    superlinear_passage,
    storage_optimality,
    diffusion_critical,
    lorenz84,
    lyapunov_certify,
    oracle_dump,
};

std::string to_string(ScenarioId id);
std::optional<ScenarioId> parse_scenario(const std::string& name);
const std::vector<ScenarioId>& all_scenarios();
/// Result tag each scenario's checks are traced to.
std::string theorem_tag(ScenarioId id);

/// One pass/fail line of a run.
struct CheckLine {
    std::string id;
    std::string theorem;
    bool pass = false;
    std::string detail;

    std::string render() const;  ///< "PASS <id> [<theorem>] <detail>"
};

struct RunOptions {
    std::filesystem::path out_dir = "lyapsim-out";
    unsigned workers = 1;
    bool waive_certify = false;
};

struct RunResult {
    /// Scenario name, or one of the plain commands simulate / moments / passage.
    std::string task;
    int exit_code = kExitPass;
    std::vector<CheckLine> checks;
    std::string failure;  ///< first failed precondition or check
    std::vector<std::filesystem::path> artifacts;  ///< relative to the output directory
    std::filesystem::path manifest;
    bool certification_waived = false;

    bool passed() const { return exit_code == kExitPass; }
    const CheckLine* find(const std::string& id) const;
};

/// Tasks accepted by run_task: the scenario names plus simulate, moments, passage.
bool is_task(const std::string& name);

/// Runs certification, simulation, estimation and the checks of one task,
/// writing CSV, SVG and summary artifacts plus manifest.json under
/// options.out_dir. Config errors become exit 2, certification failures exit 3
/// (unless waived), failed checks exit 1. Artifacts written before a failure
/// are kept and listed in the manifest.
RunResult run_task(const std::string& task, Config config, const RunOptions& options);
RunResult run_scenario(ScenarioId id, Config config, const RunOptions& options);

struct ReplayResult {
    bool identical = false;
    std::vector<std::string> mismatches;  ///< artifact paths whose hash differs
    RunResult rerun;
};

/// Re-runs the task recorded in a manifest into `out_dir` and compares every
/// artifact hash with the recorded one.
ReplayResult replay_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                             unsigned workers = 1);

/// Model described by the model.* keys (model.preset selects the factory).
ModelSpec build_model(const Config& config);

struct CertificationOutcome {
    bool pass = false;
    std::string failure;
    DissipativityParams params;
    std::optional<ExponentReport> exponents;
    std::optional<DissipativityCertificate> dissipativity;
    std::optional<KernelCertificate> kernel;
    std::optional<LyapunovCertificate> lyapunov;

    KeyValues to_kv() const;
};

/// Exponent arithmetic, dissipativity and kernel certificates, and the
/// Lyapunov condition at tail order p; c_V <= 0 selects the default rate.
CertificationOutcome certify_model(const ModelSpec& model, double p, double c_V = 0.0,
                                   const QuadratureOptions& quadrature = {});

}  // namespace lyapsim
