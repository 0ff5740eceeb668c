#include "dip/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dip/dsp.hpp"
#include "dip/error.hpp"

namespace dip::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_story(int story) {
  if (story < 1 || story > kStories) {
    throw InvalidArgument("story index " + std::to_string(story) + " outside 1..3");
  }
}

Eigen::GeneralizedSelfAdjointEigenSolver<Matrix3> modal_solver(const BuildingModel& model) {
  model.validate();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix3> solver(stiffness_matrix(model),
                                                           mass_matrix(model));
  if (solver.info() != Eigen::Success) throw NumericError("modal eigenproblem failed");
  return solver;
}

}  // namespace

void BuildingModel::validate() const {
  for (int i = 0; i < kStories; ++i) {
    if (!(story_masses[i] > 0.0) || !std::isfinite(story_masses[i])) {
      throw InvalidArgument("invalid model: story " + std::to_string(i + 1) +
                            " mass must be positive");
    }
    if (!(story_stiffnesses[i] > 0.0) || !std::isfinite(story_stiffnesses[i])) {
      throw InvalidArgument("invalid model: story " + std::to_string(i + 1) +
                            " stiffness must be positive");
    }
  }
  if (damping_ratios.size() < 2) throw InvalidArgument("invalid model: need 2 damping ratios");
  for (double z : damping_ratios) {
    if (!(z > 0.0 && z < 1.0)) throw InvalidArgument("invalid model: damping ratio outside (0, 1)");
  }
}

BuildingModel uniform_model(double story_mass, double fundamental_hz, double damping_ratio) {
  if (!(story_mass > 0.0) || !(fundamental_hz > 0.0)) {
    throw InvalidArgument("uniform model needs positive mass and frequency");
  }
  // Unit model (m = k = 1) has omega_1^2 = lambda_min of tridiag(2,-1; ...,1).
  BuildingModel unit;
  unit.story_masses = {1.0, 1.0, 1.0};
  unit.story_stiffnesses = {1.0, 1.0, 1.0};
  const double unit_omega = kTwoPi * modal_frequencies(unit)[0];
  const double omega = kTwoPi * fundamental_hz;
  const double k = story_mass * (omega / unit_omega) * (omega / unit_omega);

  BuildingModel model;
  model.story_masses.fill(story_mass);
  model.story_stiffnesses.fill(k);
  model.damping_ratios = {damping_ratio, damping_ratio};
  model.validate();
  return model;
}

Matrix3 mass_matrix(const BuildingModel& model) {
  return Vector3(model.story_masses[0], model.story_masses[1], model.story_masses[2]).asDiagonal();
}

Matrix3 stiffness_matrix(const BuildingModel& model) {
  const auto& k = model.story_stiffnesses;
  Matrix3 m;
  m << k[0] + k[1], -k[1], 0.0,
       -k[1], k[1] + k[2], -k[2],
       0.0, -k[2], k[2];
  return m;
}

Matrix3 rayleigh_damping(const BuildingModel& model) {
  const auto f = modal_frequencies(model);
  const double w1 = kTwoPi * f[0];
  const double w2 = kTwoPi * f[1];
  const double z1 = model.damping_ratios[0];
  const double z2 = model.damping_ratios[1];
  // zeta_i = a0 / (2 w_i) + a1 w_i / 2
  Eigen::Matrix2d a;
  a << 1.0 / (2.0 * w1), w1 / 2.0,
       1.0 / (2.0 * w2), w2 / 2.0;
  const Eigen::Vector2d coeff = a.partialPivLu().solve(Eigen::Vector2d(z1, z2));
  return coeff[0] * mass_matrix(model) + coeff[1] * stiffness_matrix(model);
}

std::array<double, kStories> modal_frequencies(const BuildingModel& model) {
  const auto solver = modal_solver(model);
  std::array<double, kStories> out{};
  for (int i = 0; i < kStories; ++i) {
    out[i] = std::sqrt(std::max(solver.eigenvalues()[i], 0.0)) / kTwoPi;
  }
  return out;
}

Matrix3 mode_shapes(const BuildingModel& model) { return modal_solver(model).eigenvectors(); }

void DeteriorationScenario::validate() const {
  check_story(story);
  if (!(adr >= 0.0)) throw InvalidArgument("ADR must be >= 0");
  if (!(duration_years >= 0.0)) throw InvalidArgument("deterioration duration must be >= 0");
  if (!(deterioration_ratio() < 1.0)) {
    throw InvalidArgument("degenerate scenario: adr * years = " +
                          std::to_string(deterioration_ratio()) + " >= 1");
  }
}

double deteriorated_stiffness(double base, const DeteriorationScenario& scenario) {
  scenario.validate();
  return base * (1.0 - scenario.deterioration_ratio());
}

DeteriorationScenario deterioration_state(int story, int state, double adr, double period_years) {
  if (state < 1 || state > 5) throw InvalidArgument("severity state outside 1..5");
  DeteriorationScenario s;
  s.story = story;
  s.adr = adr;
  s.duration_years = (state - 1) * period_years / 4.0;
  s.severity_state = state;
  s.validate();
  return s;
}

BuildingModel apply(const BuildingModel& base, const DeteriorationScenario& scenario) {
  BuildingModel out = base;
  auto& k = out.story_stiffnesses[static_cast<std::size_t>(scenario.story - 1)];
  k = deteriorated_stiffness(k, scenario);
  return out;
}

void DamageScenario::validate() const {
  if (state_label < 1 || state_label > 9) throw InvalidArgument("damage state outside 1..9");
  if (!(stiffness_reduction_fraction >= 0.0 && stiffness_reduction_fraction < 1.0)) {
    throw InvalidArgument("stiffness reduction must lie in [0, 1)");
  }
  if (affected_story != 0) check_story(affected_story);
  if (mass && (mass->floor < 0 || mass->floor > kStories || !(mass->mass_kg >= 0.0))) {
    throw InvalidArgument("invalid mass perturbation");
  }
}

DamageScenario damage_state(int label, double column_reduction) {
  if (!(column_reduction >= 0.0 && column_reduction < 1.0)) {
    throw InvalidArgument("column reduction must lie in [0, 1)");
  }
  constexpr double kColumnsPerStory = 4.0;
  DamageScenario s;
  s.state_label = label;
  switch (label) {
    case 1:
      break;
    case 2:
      s.mass = MassPerturbation{1.2, 0};
      break;
    case 3:
      s.mass = MassPerturbation{1.2, 1};
      break;
    case 4:
    case 5:
    case 6:
    case 7:
    case 8:
    case 9: {
      // 4/5 -> story 1, 6/7 -> story 2, 8/9 -> story 3; odd labels above 4
      // reduce two columns.
      s.affected_story = (label - 2) / 2;
      const double columns = (label % 2 == 0) ? 1.0 : 2.0;
      s.stiffness_reduction_fraction = column_reduction * columns / kColumnsPerStory;
      break;
    }
    default:
      throw InvalidArgument("damage state outside 1..9");
  }
  s.validate();
  return s;
}

int damage_group(int state_label) {
  if (state_label == 1) return 0;
  if (state_label >= 2 && state_label <= 5) return 1;
  if (state_label == 6 || state_label == 7) return 2;
  if (state_label == 8 || state_label == 9) return 3;
  throw InvalidArgument("damage state outside 1..9");
}

BuildingModel apply(const BuildingModel& base, const DamageScenario& scenario) {
  scenario.validate();
  BuildingModel out = base;
  if (scenario.affected_story != 0) {
    out.story_stiffnesses[static_cast<std::size_t>(scenario.affected_story - 1)] *=
        1.0 - scenario.stiffness_reduction_fraction;
  }
  // A mass on the base plate moves with the ground and leaves the
  // fixed-base model unchanged.
  if (scenario.mass && scenario.mass->floor > 0) {
    out.story_masses[static_cast<std::size_t>(scenario.mass->floor - 1)] += scenario.mass->mass_kg;
  }
  return out;
}

std::vector<double> ambient_excitation(std::size_t samples, double sampling_rate_hz,
                                       double bandwidth_fraction, double rms, std::uint64_t seed) {
  std::vector<double> out(samples, 0.0);
  if (rms == 0.0 || samples == 0) return out;
  if (!(bandwidth_fraction > 0.0 && bandwidth_fraction < 1.0)) {
    throw InvalidArgument("excitation bandwidth fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);

  dsp::FilterSpec spec;
  spec.order = 8;
  spec.passband_ripple_db = 1.0;
  spec.cutoff_hz = bandwidth_fraction * sampling_rate_hz / 2.0;
  out = dsp::filter_causal(dsp::design_lowpass(spec, sampling_rate_hz), out);

  double ss = 0.0;
  for (double v : out) ss += v * v;
  const double actual = std::sqrt(ss / static_cast<double>(samples));
  const double scale = actual > 0.0 ? rms / actual : 0.0;
  for (double& v : out) v *= scale;
  return out;
}

Trajectory integrate(const BuildingModel& model, const ExcitationSpec& excitation,
                     std::size_t samples, double sampling_rate_hz, std::uint64_t seed) {
  model.validate();
  if (!(sampling_rate_hz > 0.0)) throw InvalidArgument("sampling rate must be > 0");
  if (samples == 0) throw InvalidArgument("simulation needs at least one sample");

  const double dt = 1.0 / sampling_rate_hz;
  const Matrix3 m = mass_matrix(model);
  const Matrix3 k = stiffness_matrix(model);
  const Matrix3 c = excitation.damped ? rayleigh_damping(model) : Matrix3::Zero().eval();
  const Vector3 influence = m * Vector3::Ones();

  Trajectory traj;
  traj.ground_acceleration = ambient_excitation(samples, sampling_rate_hz,
                                                excitation.bandwidth_fraction,
                                                excitation.ground_rms, seed);
  traj.displacement.resize(kStories, static_cast<Eigen::Index>(samples));
  traj.velocity.resize(kStories, static_cast<Eigen::Index>(samples));
  traj.acceleration.resize(kStories, static_cast<Eigen::Index>(samples));

  // Average acceleration: gamma = 1/2, beta = 1/4.
  const double c0 = 4.0 / (dt * dt);
  const double c1 = 4.0 / dt;
  const double c2 = 2.0 / dt;
  const Matrix3 keff_inv = (k + c2 * c + c0 * m).inverse();

  Vector3 x = excitation.initial_displacement;
  Vector3 v = excitation.initial_velocity;
  const auto& ag = traj.ground_acceleration;
  Vector3 a = m.inverse() * (-influence * ag[0] - c * v - k * x);

  for (std::size_t i = 0; i < samples; ++i) {
    if (i > 0) {
      const Vector3 p = -influence * ag[i] + m * (c0 * x + c1 * v + a) + c * (c2 * x + v);
      const Vector3 xn = keff_inv * p;
      const Vector3 an = c0 * (xn - x) - c1 * v - a;
      const Vector3 vn = v + 0.5 * dt * (a + an);
      x = xn;
      v = vn;
      a = an;
      if (!x.allFinite() || !v.allFinite() || !a.allFinite()) {
        throw NumericError("integration failure: non-finite state at step " + std::to_string(i));
      }
    }
    const auto col = static_cast<Eigen::Index>(i);
    traj.displacement.col(col) = x;
    traj.velocity.col(col) = v;
    traj.acceleration.col(col) = a;
  }
  return traj;
}

Matrix simulate(const BuildingModel& model, const ExcitationSpec& excitation,
                double duration_seconds, double sampling_rate_hz, std::uint64_t seed) {
  if (!(duration_seconds > 0.0)) throw InvalidArgument("simulation duration must be > 0");
  if (!(excitation.warmup_seconds >= 0.0)) throw InvalidArgument("warm-up must be >= 0");
  const auto samples = static_cast<std::size_t>(std::llround(duration_seconds * sampling_rate_hz));
  const auto warmup =
      static_cast<std::size_t>(std::llround(excitation.warmup_seconds * sampling_rate_hz));

  const Trajectory traj =
      integrate(model, excitation, warmup + samples, sampling_rate_hz, derive_seed(seed, 1, 0));

  Matrix out(kStories, static_cast<Eigen::Index>(samples));
  for (std::size_t i = 0; i < samples; ++i) {
    const auto src = static_cast<Eigen::Index>(warmup + i);
    out.col(static_cast<Eigen::Index>(i)) =
        traj.acceleration.col(src).array() + traj.ground_acceleration[warmup + i];
  }

  if (excitation.snr_db) {
    std::mt19937_64 rng(derive_seed(seed, 2, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index ch = 0; ch < out.rows(); ++ch) {
      const double rms = std::sqrt(out.row(ch).squaredNorm() / static_cast<double>(out.cols()));
      const double sigma = rms / std::pow(10.0, *excitation.snr_db / 20.0);
      if (sigma == 0.0) continue;
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(ch, j) += sigma * normal(rng);
    }
  }
  if (!out.allFinite()) throw NumericError("integration failure: non-finite response");
  return out;
}

ScenarioSet deterioration_localization(const BuildingModel& base, double adr,
                                       double period_years) {
  ScenarioSet set;
  set.name = "deterioration-localization";
  set.classes.push_back({"Healthy", {{1, base}}});
  for (int story = 1; story <= kStories; ++story) {
    ClassSpec cls{"Scenario " + std::to_string(story), {}};
    for (int state = 2; state <= 5; ++state) {
      cls.variants.push_back(
          {state, apply(base, deterioration_state(story, state, adr, period_years))});
    }
    set.classes.push_back(std::move(cls));
  }
  return set;
}

ScenarioSet deterioration_severity(const BuildingModel& base, int story, double adr,
                                   double period_years) {
  check_story(story);
  ScenarioSet set;
  set.name = "deterioration-severity-" + std::to_string(story);
  for (int state = 2; state <= 5; ++state) {
    set.classes.push_back(
        {"State " + std::to_string(state),
         {{state, apply(base, deterioration_state(story, state, adr, period_years))}}});
  }
  return set;
}

ScenarioSet damage_localization(const BuildingModel& base, double column_reduction) {
  ScenarioSet set;
  set.name = "damage-localization";
  const std::vector<std::vector<int>> groups = {{1}, {2, 3, 4, 5}, {6, 7}, {8, 9}};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ClassSpec cls{g == 0 ? "Healthy" : "Story " + std::to_string(g), {}};
    for (int label : groups[g]) {
      cls.variants.push_back({label, apply(base, damage_state(label, column_reduction))});
    }
    set.classes.push_back(std::move(cls));
  }
  return set;
}

ScenarioSet damage_severity(const BuildingModel& base, int story, double column_reduction) {
  check_story(story);
  ScenarioSet set;
  set.name = "damage-severity-" + std::to_string(story);
  for (int label = 2; label <= 9; ++label) {
    if (damage_group(label) != story) continue;
    set.classes.push_back({"State " + std::to_string(label),
                           {{label, apply(base, damage_state(label, column_reduction))}}});
  }
  return set;
}

Dataset generate_dataset(const ScenarioSet& scenarios, int records_per_class,
                         double sampling_rate_hz, std::uint64_t seed,
                         const GenerateOptions& options) {
  if (records_per_class < 1) throw InvalidArgument("records per class must be >= 1");
  if (scenarios.classes.empty()) throw InvalidArgument("scenario set has no classes");
  if (options.segment_samples < 8) throw InvalidArgument("segment length must be >= 8");

  struct Job {
    int cls;
    std::size_t variant;
    std::size_t count;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < scenarios.classes.size(); ++c) {
    const auto& variants = scenarios.classes[c].variants;
    if (variants.empty()) throw InvalidArgument("class '" + scenarios.classes[c].name + "' is empty");
    const std::size_t n = static_cast<std::size_t>(records_per_class);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const std::size_t count = n / variants.size() + (v < n % variants.size() ? 1 : 0);
      if (count > 0) jobs.push_back({static_cast<int>(c), v, count});
    }
  }

  const std::size_t seg = options.segment_samples;
  std::vector<Matrix> sims(jobs.size());
  auto run = [&](std::size_t j) {
    const Job& job = jobs[j];
    const std::size_t needed = job.count * seg;
    std::size_t samples = needed;
    if (options.simulation_seconds > 0.0) {
      samples = static_cast<std::size_t>(std::llround(options.simulation_seconds * sampling_rate_hz));
      if (samples < needed) {
        throw InvalidArgument("insufficient data: " + std::to_string(samples) +
                              " simulated samples cannot hold " + std::to_string(job.count) +
                              " segments of " + std::to_string(seg));
      }
    }
    const auto& variant = scenarios.classes[static_cast<std::size_t>(job.cls)].variants[job.variant];
    sims[j] = simulate(variant.model, scenarios.excitation,
                       static_cast<double>(samples) / sampling_rate_hz, sampling_rate_hz,
                       derive_seed(seed, static_cast<std::uint64_t>(job.cls) + 1, job.variant + 1));
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs.size());
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          try {
            run(j);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Dataset out;
  out.sampling_rate_hz = sampling_rate_hz;
  for (const auto& c : scenarios.classes) out.class_names.push_back(c.name);
  std::uint64_t id = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const auto& variant = scenarios.classes[static_cast<std::size_t>(job.cls)].variants[job.variant];
    for (std::size_t r = 0; r < job.count; ++r) {
      SignalRecord rec;
      rec.data = sims[j].middleCols(static_cast<Eigen::Index>(r * seg), static_cast<Eigen::Index>(seg));
      rec.sampling_rate_hz = sampling_rate_hz;
      rec.label = job.cls;
      rec.state = variant.state;
      rec.record_id = id++;
      rec.segment_start = r * seg;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace dip::synth
