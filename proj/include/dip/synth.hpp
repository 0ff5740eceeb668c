#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dip/seed.hpp"
#include "dip/types.hpp"

namespace dip::synth {

inline constexpr int kStories = 3;
inline constexpr std::size_t kSegmentSamples = 1024;

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Lumped-mass 3-DOF shear building. Story i connects floor i to floor i-1
/// (floor 0 is the ground).
struct BuildingModel {
  std::array<double, kStories> story_masses{1000.0, 1000.0, 1000.0};
  std::array<double, kStories> story_stiffnesses{1.0e6, 1.0e6, 1.0e6};
  /// Modal damping ratios for modes 1 and 2 (Rayleigh fit).
  std::vector<double> damping_ratios{0.02, 0.02};

  /// Throws InvalidArgument unless masses and stiffnesses are positive and
  /// damping ratios lie in (0, 1).
  void validate() const;
};

/// Equal masses and stiffnesses, stiffness chosen so that the fundamental
/// frequency equals `fundamental_hz`.
BuildingModel uniform_model(double story_mass, double fundamental_hz, double damping_ratio = 0.02);

Matrix3 mass_matrix(const BuildingModel& model);
Matrix3 stiffness_matrix(const BuildingModel& model);
/// C = a0 M + a1 K matching the first two damping ratios at modes 1 and 2.
Matrix3 rayleigh_damping(const BuildingModel& model);

/// Natural frequencies in Hz, ascending.
std::array<double, kStories> modal_frequencies(const BuildingModel& model);

/// Mass-normalized mode shapes (columns), ordered like modal_frequencies.
Matrix3 mode_shapes(const BuildingModel& model);

/// Gradual rebar-area loss mapped one-to-one onto story stiffness.
struct DeteriorationScenario {
  int story = 1;                 ///< 1..3
  double adr = 2e-3;             ///< annual deterioration rate, 1/year
  double duration_years = 0.0;   ///< elapsed deterioration time
  int severity_state = 1;        ///< 1 = baseline, 2..5 increasing

  double deterioration_ratio() const { return adr * duration_years; }
  void validate() const;
};

/// base * (1 - adr * years). Throws InvalidArgument when adr * years >= 1.
double deteriorated_stiffness(double base, const DeteriorationScenario& scenario);

/// Severity state s in 1..5 over `period_years`: duration = (s-1) * period / 4.
DeteriorationScenario deterioration_state(int story, int state, double adr = 2e-3,
                                          double period_years = 50.0);

BuildingModel apply(const BuildingModel& base, const DeteriorationScenario& scenario);

struct MassPerturbation {
  double mass_kg = 0.0;
  int floor = 0;  ///< 0 = base, 1..3 = floors above ground
};

/// Bookshelf-style structural state. Columns per story are four; one
/// reduced column therefore removes a quarter of the column reduction from
/// the story.
struct DamageScenario {
  int state_label = 1;                    ///< 1..9
  double stiffness_reduction_fraction = 0.0;
  int affected_story = 0;                 ///< 0 = none
  std::optional<MassPerturbation> mass;

  void validate() const;
};

/// Structural state 1..9 of the bookshelf benchmark. `column_reduction` is
/// the per-column stiffness loss (0.875 by default).
DamageScenario damage_state(int label, double column_reduction = 0.875);

/// Damage localization group of a state: 0 healthy, 1..3 story.
int damage_group(int state_label);

BuildingModel apply(const BuildingModel& base, const DamageScenario& scenario);

/// Ambient base excitation and sensor model.
struct ExcitationSpec {
  /// RMS of the band-limited ground acceleration (m/s^2). Zero disables it.
  double ground_rms = 1.0;
  /// Low-pass edge of the ground noise as a fraction of Nyquist.
  double bandwidth_fraction = 0.4;
  /// Additive sensor noise; none when empty.
  std::optional<double> snr_db = 20.0;
  /// Simulated time discarded before the first returned sample.
  double warmup_seconds = 20.0;
  Vector3 initial_displacement = Vector3::Zero();
  Vector3 initial_velocity = Vector3::Zero();
  /// Rayleigh damping on/off. Off gives the undamped system.
  bool damped = true;
};

/// Relative floor response plus ground motion, one column per time step.
struct Trajectory {
  Matrix displacement;   ///< 3 x samples, relative to the ground
  Matrix velocity;
  Matrix acceleration;
  std::vector<double> ground_acceleration;
};

/// Newmark average-acceleration integration of
///   M x'' + C x' + K x = -M 1 ag(t)
/// with dt = 1 / fs, starting from the excitation's initial conditions. No warm-up
/// is discarded and no sensor noise is added.
Trajectory integrate(const BuildingModel& model, const ExcitationSpec& excitation,
                     std::size_t samples, double sampling_rate_hz, std::uint64_t seed);

/// Absolute floor accelerations (3 x round(duration * fs)) after the warm-up,
/// plus sensor noise. Deterministic in `seed`. Throws NumericError if the
/// integration produces non-finite states.
Matrix simulate(const BuildingModel& model, const ExcitationSpec& excitation,
                double duration_seconds, double sampling_rate_hz, std::uint64_t seed);

/// Band-limited Gaussian ground acceleration, `samples` long.
std::vector<double> ambient_excitation(std::size_t samples, double sampling_rate_hz,
                                       double bandwidth_fraction, double rms, std::uint64_t seed);

struct SignalRecord {
  Matrix data;                  ///< channels x samples, m/s^2
  double sampling_rate_hz = 0.0;
  int label = 0;                ///< class index
  int state = 1;                ///< structural / severity state
  std::uint64_t record_id = 0;
  std::size_t segment_start = 0;  ///< first sample within its source simulation
};

/// One building configuration contributing records to a class.
struct Variant {
  int state = 1;
  BuildingModel model;
};

struct ClassSpec {
  std::string name;
  std::vector<Variant> variants;
};

struct ScenarioSet {
  std::string name;
  std::vector<ClassSpec> classes;
  ExcitationSpec excitation;
};

/// healthy + one class per deteriorated story, each deteriorated class made
/// of severity states 2..5.
ScenarioSet deterioration_localization(const BuildingModel& base, double adr = 2e-3,
                                       double period_years = 50.0);
/// Severity states 2..5 of one deteriorated story.
ScenarioSet deterioration_severity(const BuildingModel& base, int story, double adr = 2e-3,
                                   double period_years = 50.0);
/// healthy = {1}, story 1 = {2,3,4,5}, story 2 = {6,7}, story 3 = {8,9}.
ScenarioSet damage_localization(const BuildingModel& base, double column_reduction = 0.875);
/// The states grouped under one story.
ScenarioSet damage_severity(const BuildingModel& base, int story, double column_reduction = 0.875);

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<SignalRecord> records;
  double sampling_rate_hz = 0.0;
};

struct GenerateOptions {
  std::size_t segment_samples = kSegmentSamples;
  /// Length of each source simulation; 0 sizes it to fit the records.
  double simulation_seconds = 0.0;
  int threads = 1;
};

/// Records per class are split evenly over the class's variants (remainder
/// to the first variants); each variant's records are consecutive disjoint
/// segments of one simulation. Record ids run from 0 in class order.
Dataset generate_dataset(const ScenarioSet& scenarios, int records_per_class,
                         double sampling_rate_hz, std::uint64_t seed,
                         const GenerateOptions& options = {});

using dip::derive_seed;

}  // namespace dip::synth
