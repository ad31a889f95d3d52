#pragma once

// Full-system trajectories with section events, measured crossing data,
// time-shift fits and the sweep / Monte Carlo drivers.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sepcross/averaging.hpp"
#include "sepcross/coeffs.hpp"
#include "sepcross/jump.hpp"

namespace sepcross {

struct SectionEvent {
  double t = 0.0;
  Ray ray = Ray::eta_plus;
  double p = 0.0, q = 0.0;
  std::vector<double> z;
  double h = 0.0;    // H - h_C at the event
  double h_C = 0.0;
  double Hint = 0.0; // integral of H dt since t = 0
};

struct SimOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  double t_end = 1e6;
  // Stop at the first event on a xi ray with h <= stop_h (post-crossing window end).
  std::optional<double> stop_h;
  // Stop once capture is confirmed and this many further rounds were seen.
  std::optional<int> rounds_after_capture;
  // Dense samples every sample_dt when positive.
  double sample_dt = 0.0;
};

struct TrajectoryRecord {
  std::string model;
  double eps = 0.0;
  std::vector<double> y0;  // p, q, z...
  std::vector<SectionEvent> events;
  std::vector<double> sample_t;
  std::vector<std::vector<double>> samples;  // p, q, z..., h
  std::string termination;
  double t_final = 0.0;
  std::vector<double> y_final;
  std::size_t steps = 0;
};

// Phase point on the frozen orbit E = h of a domain, arc-time phi T / (2 pi)
// from its default section; returns (p, q, z...).
std::vector<double> initial_state(const SystemPtr& sys, const SaddleChart& chart, Domain d,
                                  double h, double phi);

TrajectoryRecord integrate_full(const SystemPtr& sys, const SaddleChart& chart,
                                const std::vector<double>& y0, double eps,
                                const SimOptions& opt = {});

struct CrossingRecord {
  Domain target = Domain::G2;
  bool ambiguous = false;
  std::size_t eta_index = 0, xi_index = 0;  // indices into the event list
  Ray eta_ray = Ray::eta_plus;
  double t0 = 0.0, h0 = 0.0;
  std::vector<double> z0;
  double t0p = 0.0, h0p = 0.0;
  std::vector<double> z0p;
  double xi3 = 0.0, xi_i = 0.0;   // from measured h0 and h'0
  bool valid = false;
  std::vector<double> increments;  // h_n - h_{n+1} over consecutive eta+ events before capture
};

// Throws not_captured when no capture is confirmed.
CrossingRecord extract_crossing(const TrajectoryRecord& traj, const SeparatrixCoefficients& c,
                                double k = 3.0);

// One rotation between two consecutive events on the same ray.
struct Round {
  double t_a = 0.0, t_b = 0.0;
  double h_avg = 0.0;
  std::vector<double> z_avg;
};
// Rounds on a ray whose both endpoint energies lie in [h_lo, h_hi].
std::vector<Round> rounds_in_window(const TrajectoryRecord& traj, Ray ray, double h_lo,
                                    double h_hi);

struct TimeShift {
  double delta = 0.0;
  double rms = 0.0;
  std::size_t rounds = 0;
};
// delta minimizing the mismatch between round-averaged h and the round
// average of hbar(eps t + delta).
TimeShift fit_time_shift(const std::vector<Round>& rounds, const AveragedSolution& avg,
                         double eps);

struct InvariantMeasurement {
  double t_a = 0.0, t_b = 0.0;
  double J = 0.0;          // improved invariant averaged over section events
  double J_scatter = 0.0;  // standard deviation over events
  double J_avg = 0.0;      // cross-check: round averages of I(h, z)
  std::size_t n = 0;
  bool suspect = false;    // methods differ by more than 10 eps^2
};

// Uses the rounds of one ray within [h_lo, h_hi]; margin is the minimum |h| allowed.
InvariantMeasurement measure_invariant(const SystemPtr& sys, const SaddleChart& chart_hint,
                                       const TrajectoryRecord& traj, Ray ray, double h_lo,
                                       double h_hi, double margin = 1e-3);

struct SweepConfig {
  SystemPtr sys;
  std::vector<double> z0;
  Vec2 saddle_seed;
  SectionConfig sections;
  double eps = 1e-3;
  double h_init = 0.3;
  std::size_t phases = 8;
  std::optional<std::uint64_t> seed;  // random phases when set
  double k_window = 3.0;
  // Fitting / measurement windows: G3 rounds with h in [pre_lo, pre_hi], target
  // rounds with -h in [post_lo, post_hi]. Without post windows runs stop after capture.
  double pre_lo = 0.05, pre_hi = 0.2;
  std::optional<double> post_lo, post_hi;
  bool time_shift = true;
  bool invariant = false;
  // Spread initial energies uniformly over one round's loss [h_init, h_init + eps Theta3],
  // so that initial data are uniform in phase-space area rather than on one curve.
  bool energy_layer = false;
  SimOptions sim;
  CoeffOptions coeff;
};

struct SweepRow {
  std::size_t run_id = 0;
  double eps = 0.0, phi0 = 0.0, h_init = 0.0;
  std::string target;
  double xi3 = NAN, xi_i = NAN;
  double xi3_eta_plus = NAN;  // h at the last eta+ event over eps Theta3
  bool valid = false, ambiguous = false;
  double h0 = NAN, h0p = NAN, t0 = NAN, t0p = NAN;
  std::vector<double> z0, z0p;
  double measured_dtau = NAN, predicted_dtau = NAN;
  double delta_minus = NAN, delta_plus = NAN;
  double J_minus = NAN, J_plus = NAN, predicted_J_plus = NAN, baseline_J_plus = NAN;
  std::string error;
};

// Shared data computed once per sweep.
struct SweepContext {
  SaddleChart chart0;
  double layer_width = 0.0;    // eps Theta3 at h_init, when energy_layer is set
  AveragedSolution avg_to[2];  // glued G3 -> G1, G3 -> G2
  double tau_star = 0.0;
  std::vector<double> z_star;
  SeparatrixCoefficients coeffs;  // at z_*
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepContext context;
  std::vector<double> phases;
  std::vector<double> layer;  // fractions of the energy layer, empty without energy_layer
};

SweepContext prepare_sweep(const SweepConfig& cfg);
// layer is the fraction of the energy layer above h_init (0 without energy_layer).
SweepRow run_one(const SweepConfig& cfg, const SweepContext& ctx, std::size_t id, double phi,
                 double layer = 0.0);
SweepResult run_sweep(const SweepConfig& cfg);

// Phases used by a sweep: equispaced 2 pi (k + 1/2) / N, or seeded uniform draws.
std::vector<double> sweep_phases(std::size_t n, std::optional<std::uint64_t> seed);
// Layer fractions in [0, 1): seeded uniform draws from a stream independent of
// the phases, or the golden-ratio sequence.
std::vector<double> sweep_layer(std::size_t n, std::optional<std::uint64_t> seed);

// Worker count from SEPCROSS_THREADS (default 1).
unsigned worker_count();

struct CaptureStats {
  std::size_t n = 0, captured = 0, ambiguous = 0, invalid_window = 0, errors = 0;
  std::size_t count[2] = {0, 0};
  double fraction[2] = {0.0, 0.0};
  double ci_lo[2] = {0.0, 0.0}, ci_hi[2] = {0.0, 0.0};
  double theta_i3[2] = {0.0, 0.0};
  std::vector<double> xi3;  // from the last eta+ event before capture
  double ks_D = 0.0, ks_p = 0.0;
  nlohmann::json to_json() const;
};

CaptureStats capture_fractions(const SweepResult& sweep);

}  // namespace sepcross
