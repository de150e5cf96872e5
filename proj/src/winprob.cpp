#include "cfbwp/winprob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "cfbwp/errors.hpp"
#include "cfbwp/optim.hpp"
#include "cfbwp/util.hpp"
#include "cfbwp/version.hpp"

namespace cfbwp::winprob {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PriorTable PriorTable::bundled_default() {
    // Elicited from a 14-expert panel; (1, 1) wherever the game is close
    // enough that the data should speak for itself.
    std::vector<PriorRow> rows = {
        {0, 900, 0, 7, 1, 1},        {0, 900, 7, 14, 21, 10},
        {0, 900, 14, 28, 16, 3},     {0, 900, 28, kInf, 59, 1},
        {900, 1800, 0, 7, 1, 1},     {900, 1800, 7, 14, 15, 7},
        {900, 1800, 14, 28, 11, 2},  {900, 1800, 28, kInf, 44, 1},
        {1800, 2700, 0, 7, 1, 1},    {1800, 2700, 7, 14, 14, 4},
        {1800, 2700, 14, 28, 13, 1}, {1800, 2700, 28, kInf, 126, 1},
        {2700, 3300, 0, 3, 1, 1},    {2700, 3300, 3, 7, 28, 16},
        {2700, 3300, 7, 14, 27, 8},  {2700, 3300, 14, 21, 11, 1},
        {2700, 3300, 21, kInf, 98, 1},
        {3300, 3480, 0, 0, 1, 1},    {3300, 3480, 0, 3, 29, 18},
        {3300, 3480, 3, 7, 17, 6},   {3300, 3480, 7, 10, 13, 2},
        {3300, 3480, 10, 14, 16, 1}, {3300, 3480, 14, kInf, 98, 1},
        {3480, 3600, 0, 0, 1, 1},    {3480, 3600, 0, 3, 21, 10},
        {3480, 3600, 3, 7, 18, 5},   {3480, 3600, 7, 10, 16, 1},
        {3480, 3600, 10, kInf, 91, 1},
    };
    return from_rows(std::move(rows));
}

PriorTable PriorTable::from_rows(std::vector<PriorRow> rows) {
    PriorTable table;
    table.rows_ = std::move(rows);
    std::stable_sort(table.rows_.begin(), table.rows_.end(),
                     [](const PriorRow& a, const PriorRow& b) {
                         if (a.t_hi != b.t_hi) return a.t_hi < b.t_hi;
                         return a.lead_hi < b.lead_hi;
                     });
    table.validate();
    return table;
}

void PriorTable::validate() const {
    if (rows_.empty()) throw InvariantError("prior table is empty");
    double band_start = 0.0;
    std::size_t i = 0;
    while (i < rows_.size()) {
        const double t_lo = rows_[i].t_lo, t_hi = rows_[i].t_hi;
        if (t_lo != band_start) {
            throw InvariantError("prior time bands leave a gap at t=" +
                                 util::format_double(band_start));
        }
        if (!(t_hi > t_lo)) throw InvariantError("prior time band is empty");
        // Lead bands within the time band must cover [0, inf) contiguously.
        // A [0, 0] row (exact tie) is allowed as the first band.
        double lead_cursor = 0.0;
        bool first = true;
        for (; i < rows_.size() && rows_[i].t_hi == t_hi; ++i) {
            const PriorRow& r = rows_[i];
            if (r.t_lo != t_lo) throw InvariantError("prior rows mix time bands");
            const bool tie_row = first && r.lead_lo == 0 && r.lead_hi == 0;
            if (!tie_row) {
                if (r.lead_lo != lead_cursor) {
                    throw InvariantError("prior lead bands leave a gap at lead=" +
                                         util::format_double(lead_cursor));
                }
                if (!(r.lead_hi > r.lead_lo)) throw InvariantError("prior lead band is empty");
                lead_cursor = r.lead_hi;
            }
            if (!(r.alpha > 0) || !(r.beta > 0)) {
                throw InvariantError("prior parameters must be positive");
            }
            first = false;
        }
        if (lead_cursor != kInf) {
            throw InvariantError("prior lead bands must extend to infinity");
        }
        band_start = t_hi;
    }
    if (band_start < 3600.0) throw InvariantError("prior time bands must reach 3600");
}

std::pair<double, double> PriorTable::lookup(double t, double lead) const {
    if (t < 0) throw UsageError("prior lookup: negative time");
    // Bands are upper-closed; the terminal instant uses the final band.
    const double t_query = std::min(t, rows_.back().t_hi);
    const double magnitude = std::abs(lead);
    for (const PriorRow& r : rows_) {
        if (t_query > r.t_hi) continue;
        if (t_query < r.t_lo) continue;  // t exactly on a boundary binds to the lower band
        if (magnitude > r.lead_hi) continue;
        return lead >= 0 ? std::make_pair(r.alpha, r.beta)
                         : std::make_pair(r.beta, r.alpha);
    }
    throw InvariantError("prior lookup fell through; table not total");
}

double PriorTable::prior_mean(double t, double lead) const {
    auto [alpha, beta] = lookup(t, lead);
    return alpha / (alpha + beta);
}

PriorTable PriorTable::from_json(const nlohmann::json& j) {
    const nlohmann::json& rows_json = j.is_array() ? j : j.at("rows");
    std::vector<PriorRow> rows;
    for (const nlohmann::json& rj : rows_json) {
        PriorRow r;
        r.t_lo = rj.at("t_lo").get<double>();
        r.t_hi = rj.at("t_hi").get<double>();
        r.lead_lo = rj.at("lead_lo").get<double>();
        r.lead_hi = rj.at("lead_hi").is_null() ? kInf : rj.at("lead_hi").get<double>();
        r.alpha = rj.at("alpha").get<double>();
        r.beta = rj.at("beta").get<double>();
        rows.push_back(r);
    }
    return from_rows(std::move(rows));
}

nlohmann::json PriorTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const PriorRow& r : rows_) {
        nlohmann::json rj;
        rj["t_lo"] = r.t_lo;
        rj["t_hi"] = r.t_hi;
        rj["lead_lo"] = r.lead_lo;
        if (std::isinf(r.lead_hi)) {
            rj["lead_hi"] = nullptr;
        } else {
            rj["lead_hi"] = r.lead_hi;
        }
        rj["alpha"] = r.alpha;
        rj["beta"] = r.beta;
        rows.push_back(std::move(rj));
    }
    nlohmann::json j;
    j["version"] = kVersion;
    j["rows"] = std::move(rows);
    return j;
}

std::pair<double, double> WindowSchedule::half_widths(double tau) const {
    if (tau < 0) throw UsageError("window schedule: negative tau");
    if (tau >= tau_full) return {h_tau_max, h_omega_max};
    if (tau <= tau_zero) return {0.0, 0.0};
    const double f = (tau - tau_zero) / (tau_full - tau_zero);
    return {f * h_tau_max, f * h_omega_max};
}

std::pair<double, double> window_for(double tau) { return WindowSchedule{}.half_widths(tau); }

StateIndex StateIndex::build(const std::vector<std::tuple<double, double, bool>>& plays) {
    StateIndex index;
    if (plays.empty()) return index;

    index.tau_lo_ = std::numeric_limits<int>::max();
    index.tau_hi_ = std::numeric_limits<int>::min();
    index.omega_lo_ = std::numeric_limits<int>::max();
    index.omega_hi_ = std::numeric_limits<int>::min();
    std::vector<std::tuple<int, int, bool>> cells;
    cells.reserve(plays.size());
    for (const auto& [tau, omega, win] : plays) {
        const int it = static_cast<int>(std::lround(tau));
        const int io = static_cast<int>(std::lround(omega));
        index.tau_lo_ = std::min(index.tau_lo_, it);
        index.tau_hi_ = std::max(index.tau_hi_, it);
        index.omega_lo_ = std::min(index.omega_lo_, io);
        index.omega_hi_ = std::max(index.omega_hi_, io);
        cells.emplace_back(it, io, win);
    }
    const int nt = index.tau_hi_ - index.tau_lo_ + 1;
    const int no = index.omega_hi_ - index.omega_lo_ + 1;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(nt) * no, 0);
    std::vector<std::int64_t> wins(static_cast<std::size_t>(nt) * no, 0);
    for (const auto& [it, io, win] : cells) {
        const std::size_t at = static_cast<std::size_t>(it - index.tau_lo_) * no +
                               static_cast<std::size_t>(io - index.omega_lo_);
        ++counts[at];
        if (win) ++wins[at];
    }
    index.total_ = static_cast<std::int64_t>(plays.size());
    index.count_prefix_.assign(static_cast<std::size_t>(nt + 1) * (no + 1), 0);
    index.win_prefix_.assign(static_cast<std::size_t>(nt + 1) * (no + 1), 0);
    for (int a = 0; a < nt; ++a) {
        for (int b = 0; b < no; ++b) {
            const std::size_t src = static_cast<std::size_t>(a) * no + b;
            const auto cell = [&](std::vector<std::int64_t>& prefix, std::int64_t v) {
                const std::size_t stride = static_cast<std::size_t>(no + 1);
                prefix[(a + 1) * stride + (b + 1)] = v + prefix[a * stride + (b + 1)] +
                                                     prefix[(a + 1) * stride + b] -
                                                     prefix[a * stride + b];
            };
            cell(index.count_prefix_, counts[src]);
            cell(index.win_prefix_, wins[src]);
        }
    }
    return index;
}

std::int64_t StateIndex::rect(const std::vector<std::int64_t>& prefix, int t0, int t1, int w0,
                              int w1) const {
    // Inclusive cell coordinates relative to (tau_lo_, omega_lo_).
    t0 = std::max(t0, tau_lo_);
    t1 = std::min(t1, tau_hi_);
    w0 = std::max(w0, omega_lo_);
    w1 = std::min(w1, omega_hi_);
    if (t0 > t1 || w0 > w1) return 0;
    const int a0 = t0 - tau_lo_, a1 = t1 - tau_lo_ + 1;
    const int b0 = w0 - omega_lo_, b1 = w1 - omega_lo_ + 1;
    const std::size_t stride = static_cast<std::size_t>(n_omega() + 1);
    return prefix[a1 * stride + b1] - prefix[a0 * stride + b1] - prefix[a1 * stride + b0] +
           prefix[a0 * stride + b0];
}

WindowCounts StateIndex::query(double tau, double omega, double h_tau, double h_omega) const {
    WindowCounts counts;
    counts.h_tau = h_tau;
    counts.h_omega = h_omega;
    if (total_ == 0) return counts;
    const double tau_c = std::round(tau);
    const double omega_c = std::round(omega);
    const int t0 = static_cast<int>(std::ceil(tau_c - h_tau));
    const int t1 = static_cast<int>(std::floor(tau_c + h_tau));
    const int w0 = static_cast<int>(std::ceil(omega_c - h_omega));
    const int w1 = static_cast<int>(std::floor(omega_c + h_omega));
    counts.games = static_cast<double>(rect(count_prefix_, t0, t1, w0, w1));
    counts.wins = static_cast<double>(rect(win_prefix_, t0, t1, w0, w1));
    return counts;
}

nlohmann::json StateIndex::to_json() const {
    nlohmann::json j;
    j["version"] = kVersion;
    j["tau_range"] = {tau_lo_, tau_hi_};
    j["omega_range"] = {omega_lo_, omega_hi_};
    nlohmann::json cells = nlohmann::json::array();
    if (total_ > 0) {
        for (int it = tau_lo_; it <= tau_hi_; ++it) {
            for (int io = omega_lo_; io <= omega_hi_; ++io) {
                const std::int64_t n = rect(count_prefix_, it, it, io, io);
                if (n == 0) continue;
                const std::int64_t w = rect(win_prefix_, it, it, io, io);
                cells.push_back({it, io, n, w});
            }
        }
    }
    j["cells"] = std::move(cells);
    return j;
}

StateIndex StateIndex::from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<std::string>() != kVersion) {
        throw InvariantError("state index version mismatch; expected " + std::string(kVersion));
    }
    std::vector<std::tuple<double, double, bool>> plays;
    for (const nlohmann::json& cell : j.at("cells")) {
        const int it = cell.at(0).get<int>();
        const int io = cell.at(1).get<int>();
        const std::int64_t n = cell.at(2).get<std::int64_t>();
        const std::int64_t w = cell.at(3).get<std::int64_t>();
        for (std::int64_t k = 0; k < n; ++k) {
            plays.emplace_back(it, io, k < w);
        }
    }
    return build(plays);
}

StateIndex index_reference_games(const std::vector<GameRecord>& games,
                                 const std::map<int, pace::PaceTable>& paces,
                                 const pointvalue::PointValueModel& model) {
    std::vector<std::tuple<double, double, bool>> plays;
    for (const GameRecord& game : games) {
        auto season_it = paces.find(game.season);
        if (season_it == paces.end()) {
            throw InvariantError("no pace table for season " + std::to_string(game.season));
        }
        const double pace_home = season_it->second.pace_for(game.home_team);
        const double pace_away = season_it->second.pace_for(game.away_team);
        const bool win = game.home_win();
        for (const PlayRecord& play : game.plays) {
            const double tau = pace::expected_possessions_remaining(pace_home, pace_away,
                                                                    play.elapsed_seconds);
            const auto features = pointvalue::play_features(game, play, paces);
            const double swing = model.predict(features);
            const double sign = play.possession == Side::Home ? 1.0 : -1.0;
            const double omega = play.lead() + sign * swing;
            plays.emplace_back(tau, omega, win);
        }
    }
    return StateIndex::build(plays);
}

double mle(const WindowCounts& counts) {
    if (!(counts.games >= 1.0)) {
        throw InvariantError("undefined estimate: empty window");
    }
    return counts.wins / counts.games;
}

double posterior(const WindowCounts& counts, double alpha, double beta) {
    if (!(alpha > 0) || !(beta > 0)) throw UsageError("posterior: alpha, beta must be positive");
    if (counts.games < 0 || counts.wins < 0 || counts.wins > counts.games) {
        throw UsageError("posterior: bad window counts");
    }
    return (counts.wins + alpha) / (counts.games + alpha + beta);
}

std::pair<double, double> beta_from_moments(double mean, double variance) {
    if (!(mean > 0.0 && mean < 1.0)) {
        throw InvariantError("beta_from_moments: mean must be in (0, 1)");
    }
    if (!(variance > 0.0)) {
        throw InvariantError("beta_from_moments: variance must be positive");
    }
    const double q = mean * mean - mean + variance;  // negative inside the beta family
    if (q == 0.0) {
        throw InvariantError("beta_from_moments: degenerate moments");
    }
    if (q > 0.0) {
        throw InvariantError("beta_from_moments: variance too large for the mean");
    }
    const double alpha = -mean * q / variance;
    const double beta = (mean - 1.0) * q / variance;
    return {alpha, beta};
}

PriorTable fit_prior_from_poll(const std::vector<PollRow>& poll) {
    if (poll.empty()) throw UsageError("fit_prior_from_poll: empty poll");
    // Group responses by cell, keeping first-seen order.
    std::vector<PriorRow> rows;
    std::vector<std::vector<double>> samples;
    for (const PollRow& r : poll) {
        if (!(r.probability > 0.0 && r.probability < 1.0)) {
            throw InvariantError("poll probability outside (0, 1) for cell t=[" +
                                 util::format_double(r.t_lo) + "," +
                                 util::format_double(r.t_hi) + "]");
        }
        std::size_t k = 0;
        for (; k < rows.size(); ++k) {
            if (rows[k].t_lo == r.t_lo && rows[k].t_hi == r.t_hi &&
                rows[k].lead_lo == r.lead_lo && rows[k].lead_hi == r.lead_hi) {
                break;
            }
        }
        if (k == rows.size()) {
            rows.push_back(PriorRow{r.t_lo, r.t_hi, r.lead_lo, r.lead_hi, 0, 0});
            samples.emplace_back();
        }
        samples[k].push_back(r.probability);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::string cell = "cell t=[" + util::format_double(rows[k].t_lo) + "," +
                                 util::format_double(rows[k].t_hi) + "] lead=[" +
                                 util::format_double(rows[k].lead_lo) + "," +
                                 util::format_double(rows[k].lead_hi) + "]";
        if (samples[k].size() < 2) {
            throw InvariantError("fit_prior_from_poll: " + cell + " has fewer than 2 samples");
        }
        const double mean = util::mean(samples[k]);
        double ss = 0.0;
        for (double v : samples[k]) ss += (v - mean) * (v - mean);
        const double variance = ss / static_cast<double>(samples[k].size() - 1);
        if (!(variance > 0.0)) {
            throw InvariantError("fit_prior_from_poll: zero variance in " + cell);
        }
        try {
            std::tie(rows[k].alpha, rows[k].beta) = beta_from_moments(mean, variance);
        } catch (const InvariantError& e) {
            throw InvariantError("fit_prior_from_poll: " + cell + ": " + e.what());
        }
    }
    return PriorTable::from_rows(std::move(rows));
}

double pregame_prob(double spread, double sigma) {
    if (!(sigma > 0)) throw UsageError("pregame_prob: sigma must be positive");
    return util::normal_cdf(-spread / sigma);
}

double estimate_margin_sigma(const std::vector<GameRecord>& games) {
    std::vector<double> residuals;
    residuals.reserve(games.size());
    for (const GameRecord& g : games) {
        residuals.push_back(g.final_margin() - (-g.pregame_spread));
    }
    if (residuals.size() < 2) {
        throw UsageError("estimate_margin_sigma: need at least 2 games");
    }
    const double sd = util::sample_sd(residuals);
    if (!(sd > 0)) throw InvariantError("estimate_margin_sigma: zero spread residual spread");
    return sd;
}

double blend(double p_pregame, double p_ingame, double weight) {
    if (weight <= 0.0) return p_pregame;
    if (weight >= 1.0) return p_ingame;
    return (1.0 - weight) * p_pregame + weight * p_ingame;
}

const char* weight_form_name(WeightForm form) {
    switch (form) {
        case WeightForm::LinearTime: return "d1";
        case WeightForm::TimeLead: return "d2";
        case WeightForm::TimeLeadQuad: return "d3";
    }
    return "d2";
}

WeightForm weight_form_from_name(const std::string& name) {
    if (name == "d1") return WeightForm::LinearTime;
    if (name == "d2") return WeightForm::TimeLead;
    if (name == "d3") return WeightForm::TimeLeadQuad;
    throw UsageError("unknown weight form `" + name + "` (expected d1, d2, or d3)");
}

double WeightSpec::evaluate(double t, double lead) const {
    const double mag = std::abs(lead);
    switch (form) {
        case WeightForm::LinearTime:
            return coefficients[0] * t;
        case WeightForm::TimeLead:
            return coefficients[0] + coefficients[1] * t + coefficients[2] * mag;
        case WeightForm::TimeLeadQuad:
            return coefficients[0] + coefficients[1] * t + coefficients[2] * mag +
                   coefficients[3] * lead * lead;
    }
    return 0.0;
}

namespace {

std::size_t weight_dim(WeightForm form) {
    switch (form) {
        case WeightForm::LinearTime: return 1;
        case WeightForm::TimeLead: return 3;
        case WeightForm::TimeLeadQuad: return 4;
    }
    return 3;
}

double trace_brier(const std::vector<TracePoint>& traces, WeightForm form,
                   std::span<const double> coefficients) {
    WeightSpec spec{.form = form,
                    .coefficients = {coefficients.begin(), coefficients.end()}};
    double s = 0.0;
    for (const TracePoint& p : traces) {
        const double d = spec.evaluate(p.t, p.lead);
        const double err = blend(p.p_pregame, p.p_dynamic, d) - p.home_win;
        s += err * err;
    }
    return s / static_cast<double>(traces.size());
}

}  // namespace

WeightSpec fit_weights(WeightForm form, const std::vector<TracePoint>& traces,
                       std::uint64_t seed) {
    if (traces.empty()) throw UsageError("fit_weights: no traces");
    const std::size_t dim = weight_dim(form);

    const auto objective = [&](std::span<const double> x) {
        return trace_brier(traces, form, x);
    };

    // Characteristic scales: t spans thousands of seconds, leads tens.
    std::vector<double> step(dim, 0.05);
    if (form == WeightForm::LinearTime) {
        step[0] = 1.0 / 7200.0;
    } else {
        step[1] = 1e-4;
        step[2] = 0.01;
        if (dim == 4) step[3] = 1e-3;
    }

    std::vector<std::vector<double>> starts;
    starts.push_back(std::vector<double>(dim, 0.0));  // pure pregame (D == 0)
    {
        std::vector<double> all_ingame(dim, 0.0);
        all_ingame[0] = form == WeightForm::LinearTime ? 1.0 : 2.0;  // D >= 1 everywhere
        starts.push_back(all_ingame);
    }
    {
        std::vector<double> mid(dim, 0.0);
        mid[0] = form == WeightForm::LinearTime ? 1.0 / 3600.0 : 0.1;
        if (form != WeightForm::LinearTime) {
            mid[1] = 1.0 / 3600.0;
            mid[2] = 0.02;
        }
        starts.push_back(mid);
    }
    std::mt19937_64 rng(util::mix_seed(seed, 0xd2));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int r = 0; r < 5; ++r) {
        std::vector<double> x(dim);
        for (std::size_t i = 0; i < dim; ++i) x[i] = unit(rng) * 10.0 * step[i];
        starts.push_back(std::move(x));
    }

    const double pregame_score = trace_brier(traces, form, std::vector<double>(dim, 0.0));
    const double ingame_score = trace_brier(traces, form, starts[1]);

    optim::NelderMeadResult best;
    best.fx = std::numeric_limits<double>::infinity();
    for (const std::vector<double>& start : starts) {
        optim::NelderMeadResult r = optim::nelder_mead(objective, start, step);
        if (r.fx < best.fx) best = std::move(r);
    }

    WeightSpec spec;
    spec.form = form;
    spec.coefficients = best.x;
    spec.brier = best.fx;
    spec.seed = seed;
    spec.improved = best.fx <= std::min(pregame_score, ingame_score) + 1e-12;
    return spec;
}

nlohmann::json weights_to_json(const WeightSpec& spec, double sigma) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["seed"] = spec.seed;
    j["form"] = weight_form_name(spec.form);
    j["coefficients"] = spec.coefficients;
    j["brier"] = spec.brier;
    j["improved"] = spec.improved;
    j["sigma"] = sigma;
    return j;
}

std::pair<WeightSpec, double> weights_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<std::string>() != kVersion) {
        throw InvariantError("weights version mismatch; expected " + std::string(kVersion));
    }
    WeightSpec spec;
    spec.form = weight_form_from_name(j.at("form").get<std::string>());
    spec.coefficients = j.at("coefficients").get<std::vector<double>>();
    if (spec.coefficients.size() != weight_dim(spec.form)) {
        throw InvariantError("weights coefficient count does not match form");
    }
    spec.brier = j.at("brier").get<double>();
    spec.improved = j.value("improved", true);
    spec.seed = j.value("seed", std::uint64_t{0});
    return {spec, j.at("sigma").get<double>()};
}

WinProbEstimate Estimator::estimate(const GameStateKey& state, double p_pregame) const {
    if (!index || !prior) throw UsageError("estimator missing index or prior");
    const auto [h_tau, h_omega] = schedule.half_widths(state.tau);
    const WindowCounts counts = index->query(state.tau, state.omega, h_tau, h_omega);
    const auto [alpha, beta] = prior->lookup(state.t, state.lead);

    WinProbEstimate est;
    if (counts.games >= 1.0) est.mle = counts.wins / counts.games;
    est.dynamic = posterior(counts, alpha, beta);
    if (weights) {
        const double d = weights->evaluate(state.t, state.lead);
        est.adjusted = blend(p_pregame, est.dynamic, d);
    } else {
        est.adjusted = est.dynamic;
    }
    return est;
}

}  // namespace cfbwp::winprob
