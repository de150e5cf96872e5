#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cfbwp/pace.hpp"
#include "cfbwp/pointvalue.hpp"
#include "cfbwp/types.hpp"

namespace cfbwp::winprob {

// In-game state in both coordinate systems: raw clock/lead for the prior and
// weight functions, expected possessions/score for the window counts.
struct GameStateKey {
    int t = 0;          // elapsed seconds
    int lead = 0;       // home score minus away score
    double tau = 0.0;   // expected possessions remaining
    double omega = 0.0; // expected home lead after the two-possession horizon
};

struct WindowCounts {
    double games = 0.0;  // N; real-valued so pseudo-counts compose
    double wins = 0.0;   // n
    double h_tau = 0.0;
    double h_omega = 0.0;
};

struct PriorRow {
    double t_lo = 0, t_hi = 0;
    double lead_lo = 0, lead_hi = 0;  // lead_hi may be +infinity
    double alpha = 1, beta = 1;
};

// Elicited beta parameters by (elapsed time, home lead) band. Bands partition
// [0, 3600] x [0, inf); lookups with the away team ahead swap alpha and beta.
class PriorTable {
public:
    static PriorTable bundled_default();
    static PriorTable from_rows(std::vector<PriorRow> rows);
    static PriorTable from_json(const nlohmann::json& j);

    nlohmann::json to_json() const;
    std::pair<double, double> lookup(double t, double lead) const;
    double prior_mean(double t, double lead) const;
    const std::vector<PriorRow>& rows() const { return rows_; }

private:
    std::vector<PriorRow> rows_;  // grouped by time band, lead bands ascending
    void validate() const;
};

struct WindowSchedule {
    double tau_full = 15.0;   // full-width windows at or above this tau
    double tau_zero = 2.0;    // exact-cell lookups at or below this tau
    double h_tau_max = 2.0;
    double h_omega_max = 3.0;

    std::pair<double, double> half_widths(double tau) const;
};

/// Default schedule: (2, 3) half-widths down to tau_full, then linear decay
/// to point lookups at tau_zero.
std::pair<double, double> window_for(double tau);

// Reference plays bucketed on rounded (tau, omega) with prefix sums for O(1)
// rectangle counts.
class StateIndex {
public:
    static StateIndex build(const std::vector<std::tuple<double, double, bool>>& plays);
    static StateIndex from_json(const nlohmann::json& j);

    nlohmann::json to_json() const;
    WindowCounts query(double tau, double omega, double h_tau, double h_omega) const;
    std::int64_t size() const { return total_; }

private:
    int tau_lo_ = 0, tau_hi_ = -1, omega_lo_ = 0, omega_hi_ = -1;
    std::int64_t total_ = 0;
    // (n_tau+1) x (n_omega+1) inclusive prefix grids.
    std::vector<std::int64_t> count_prefix_, win_prefix_;

    std::int64_t rect(const std::vector<std::int64_t>& prefix, int t0, int t1, int w0,
                      int w1) const;
    int n_omega() const { return omega_hi_ - omega_lo_ + 1; }
};

StateIndex index_reference_games(const std::vector<GameRecord>& games,
                                 const std::map<int, pace::PaceTable>& paces,
                                 const pointvalue::PointValueModel& model);

/// Binomial MLE n/N. Throws InvariantError when the window is empty.
double mle(const WindowCounts& counts);

/// Beta-binomial posterior mean with pseudo-counts alpha, beta.
double posterior(const WindowCounts& counts, double alpha, double beta);

/// Inverts beta mean/variance by method of moments. Throws InvariantError
/// when the moments are degenerate or leave the beta family.
std::pair<double, double> beta_from_moments(double mean, double variance);

struct PollRow {
    double t_lo = 0, t_hi = 0;
    double lead_lo = 0, lead_hi = 0;
    double probability = 0.5;
};

/// One elicited probability per expert per cell -> beta parameters per cell.
PriorTable fit_prior_from_poll(const std::vector<PollRow>& poll);

/// Home win probability implied by the spread (negative = home favored)
/// under a normal margin model with standard deviation sigma.
double pregame_prob(double spread, double sigma);

/// Sample SD of (final margin - expected margin) over games; the spread's
/// sign convention makes the expected margin -pregame_spread.
double estimate_margin_sigma(const std::vector<GameRecord>& games);

/// Piecewise convex combination: all pregame at weight <= 0, all in-game at
/// weight >= 1.
double blend(double p_pregame, double p_ingame, double weight);

enum class WeightForm { LinearTime, TimeLead, TimeLeadQuad };

const char* weight_form_name(WeightForm form);           // d1 | d2 | d3
WeightForm weight_form_from_name(const std::string& name);

struct WeightSpec {
    WeightForm form = WeightForm::TimeLead;
    std::vector<double> coefficients;
    double brier = 0.0;
    bool improved = true;  // beat both single-source baselines on the fit data
    std::uint64_t seed = 0;

    double evaluate(double t, double lead) const;
};

nlohmann::json weights_to_json(const WeightSpec& spec, double sigma);
std::pair<WeightSpec, double> weights_from_json(const nlohmann::json& j);

struct TracePoint {
    double t = 0;
    double lead = 0;
    double p_dynamic = 0.5;
    double p_pregame = 0.5;
    int home_win = 0;
};

/// Brier-minimizing coefficients for the chosen form via multi-start simplex
/// search; the pure-pregame and pure-in-game configurations seed two of the
/// starts, so the result never scores worse than either.
WeightSpec fit_weights(WeightForm form, const std::vector<TracePoint>& traces,
                       std::uint64_t seed);

struct WinProbEstimate {
    std::optional<double> mle;  // empty when the window holds no games
    double dynamic = 0.5;
    double adjusted = 0.5;
};

struct Estimator {
    const StateIndex* index = nullptr;
    const PriorTable* prior = nullptr;
    const WeightSpec* weights = nullptr;  // optional; adjusted falls back to dynamic
    WindowSchedule schedule;

    WinProbEstimate estimate(const GameStateKey& state, double p_pregame) const;
};

}  // namespace cfbwp::winprob
