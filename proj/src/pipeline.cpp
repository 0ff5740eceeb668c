#include "dip/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dip/error.hpp"
#include "dip/io.hpp"
#include "dip/neural/train.hpp"
#include "dip/seed.hpp"

namespace dip::pipeline {

Stage parse_stage(const std::string& s) {
  if (s == "preprocess") return Stage::preprocess;
  if (s == "st-only") return Stage::st_only;
  if (s == "full") return Stage::full;
  throw InvalidArgument("unknown stage '" + s + "' (expected preprocess, st-only or full)");
}

synth::ScenarioSet scenario_set(const SynthConfig& c) {
  const synth::BuildingModel base = synth::uniform_model(c.mass(), c.f1(), c.damping_ratio);
  synth::ScenarioSet set;
  if (c.case_kind == CaseKind::damage) {
    set = c.severity_story == 0 ? synth::damage_localization(base, c.column_reduction)
                                : synth::damage_severity(base, c.severity_story, c.column_reduction);
  } else {
    set = c.severity_story == 0 ? synth::deterioration_localization(base, c.adr, c.period_years)
                                : synth::deterioration_severity(base, c.severity_story, c.adr, c.period_years);
  }
  set.excitation.ground_rms = c.ground_rms;
  set.excitation.bandwidth_fraction = c.bandwidth_fraction;
  set.excitation.snr_db = c.snr_db;
  set.excitation.warmup_seconds = c.warmup_seconds;
  return set;
}

synth::Dataset generate(const SynthConfig& c, int threads) {
  synth::GenerateOptions options;
  options.segment_samples = static_cast<std::size_t>(c.segment_samples);
  options.threads = threads;
  return synth::generate_dataset(scenario_set(c), c.records_per_class, c.rate(), c.seed, options);
}

namespace {

[[noreturn]] void rethrow_in_stage(const std::string& stage, std::uint64_t record_id) {
  const std::string where = fmt::format("{} (record {})", stage, record_id);
  try {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e.kind(), where, e.what());
  } catch (const std::exception& e) {
    throw StageError(ErrorKind::runtime, where, e.what());
  }
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  // Lowest index first, so the reported failure does not depend on timing.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string slugify(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

double cutoff_hz(const RunConfig& c, double rate) { return c.dsp.cutoff_hz.value_or(0.2 * rate); }

struct Task {
  std::string name;
  std::vector<std::string> class_names;
  std::vector<std::size_t> records;  ///< indices into the dataset
  std::vector<std::size_t> labels;   ///< task-local labels, parallel to records
  bool localization = false;
};

std::vector<Task> build_tasks(const synth::Dataset& d, bool severity) {
  std::vector<Task> tasks;
  Task loc{"localization", d.class_names, {}, {}, true};
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    loc.records.push_back(i);
    loc.labels.push_back(static_cast<std::size_t>(d.records[i].label));
  }
  tasks.push_back(std::move(loc));
  if (!severity) return tasks;

  for (std::size_t c = 0; c < d.class_names.size(); ++c) {
    std::set<int> states;
    for (const auto& r : d.records) {
      if (static_cast<std::size_t>(r.label) == c) states.insert(r.state);
    }
    if (states.size() < 2) continue;
    Task t;
    t.name = "severity " + d.class_names[c];
    const std::vector<int> ordered(states.begin(), states.end());
    for (int s : ordered) t.class_names.push_back(fmt::format("State {}", s));
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      if (static_cast<std::size_t>(d.records[i].label) != c) continue;
      t.records.push_back(i);
      t.labels.push_back(static_cast<std::size_t>(
          std::find(ordered.begin(), ordered.end(), d.records[i].state) - ordered.begin()));
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

nn::ModelSpec architecture_for(const Task& task, CaseKind kind, const nn::Shape& input,
                               const nn::ArchitectureOptions& options) {
  if (!task.localization) return nn::severity_architecture(input, task.class_names.size(), options);
  return kind == CaseKind::damage ? nn::damage_architecture(input, task.class_names.size(), options)
                                  : nn::localization_architecture(input, task.class_names.size(), options);
}

struct FoldOutput {
  eval::ConfusionMatrix confusion;
  int best_epoch = 0;
  std::size_t nominal_layers = 0;
};

}  // namespace

Matrix preprocess_record(const Matrix& data, const dsp::LowpassFilter& filter, std::uint64_t record_id) {
  Matrix out(data.rows(), data.cols());
  for (Eigen::Index ch = 0; ch < data.rows(); ++ch) {
    std::vector<double> x(data.row(ch).begin(), data.row(ch).end());
    try {
      x = dsp::apply_zero_phase(filter, x);
    } catch (...) {
      rethrow_in_stage("filter", record_id);
    }
    try {
      x = dsp::standardize(x);
    } catch (...) {
      rethrow_in_stage("standardize", record_id);
    }
    std::copy(x.begin(), x.end(), out.row(ch).begin());
  }
  return out;
}

std::vector<Matrix> st_channels(const Matrix& whitened, double sampling_rate_hz, const StConfig& st) {
  const auto n = static_cast<std::size_t>(whitened.cols());
  const st::Band band = st::cropped_band(n, sampling_rate_hz);
  std::vector<Matrix> out;
  for (Eigen::Index ch = 0; ch < whitened.rows(); ++ch) {
    const std::vector<double> x(whitened.row(ch).begin(), whitened.row(ch).end());
    out.push_back(st::downsample(st::stockwell_magnitude(x, band.first_row, band.last_row),
                                 st.freq_pool, st.time_pool));
  }
  return out;
}

std::vector<std::size_t> spectrogram_shape(std::size_t channels, std::size_t samples, const StConfig& st) {
  return {channels, samples / 4 / static_cast<std::size_t>(st.freq_pool),
          samples / static_cast<std::size_t>(st.time_pool)};
}

double TaskResult::accuracy() const {
  return static_cast<double>(aggregate.trace()) / static_cast<double>(aggregate.total());
}

Result run(const synth::Dataset& dataset, const Options& options) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  auto say = [&](const std::string& msg) {
    if (options.progress) options.progress(msg);
  };
  if (dataset.records.empty()) throw InvalidArgument("dataset has no records");
  const double rate = dataset.sampling_rate_hz;
  const auto channels = static_cast<std::size_t>(dataset.records.front().data.rows());
  const auto samples = static_cast<std::size_t>(dataset.records.front().data.cols());
  for (const auto& r : dataset.records) {
    if (static_cast<std::size_t>(r.data.rows()) != channels ||
        static_cast<std::size_t>(r.data.cols()) != samples || r.sampling_rate_hz != rate) {
      throw StageError(ErrorKind::validation, fmt::format("load (record {})", r.record_id),
                       "record shape or sampling rate differs from the first record");
    }
  }
  if ((samples / 4) % static_cast<std::size_t>(cfg.st.freq_pool) != 0 ||
      samples % static_cast<std::size_t>(cfg.st.time_pool) != 0) {
    throw InvalidArgument("st pooling factors do not divide the spectrogram of " +
                          std::to_string(samples) + "-sample records");
  }

  dsp::FilterSpec fspec;
  fspec.order = cfg.dsp.filter_order;
  fspec.passband_ripple_db = cfg.dsp.ripple_db;
  fspec.cutoff_hz = cutoff_hz(cfg, rate);
  dsp::LowpassFilter filter;
  try {
    filter = dsp::design_lowpass(fspec, rate);
  } catch (...) {
    rethrow_in_stage("filter design", 0);
  }

  say(fmt::format("preprocessing {} records", dataset.records.size()));
  std::vector<Matrix> pre(dataset.records.size());
  parallel_for(pre.size(), options.threads, [&](std::size_t i) {
    pre[i] = preprocess_record(dataset.records[i].data, filter, dataset.records[i].record_id);
  });

  const nn::Shape input = spectrogram_shape(channels, samples, cfg.st);
  Result result;

  if (options.stage != Stage::full) {
    dsp::WhiteningTransform zca;
    try {
      zca = dsp::fit_zca(pre, cfg.dsp.zca_epsilon);
    } catch (...) {
      rethrow_in_stage("zca", 0);
    }
    io::DipdFile out;
    out.class_names = dataset.class_names;
    for (const auto& r : dataset.records) {
      out.records.push_back({r.record_id, r.label, r.state, r.sampling_rate_hz, r.segment_start});
    }
    if (options.stage == Stage::preprocess) {
      out.dims = {pre.size(), channels, samples};
      for (const auto& m : pre) {
        const Matrix w = dsp::apply_whitening(zca, m);
        out.values.insert(out.values.end(), w.data(), w.data() + w.size());
      }
    } else {
      std::vector<std::vector<Matrix>> images(pre.size());
      parallel_for(pre.size(), options.threads, [&](std::size_t i) {
        try {
          images[i] = st_channels(dsp::apply_whitening(zca, pre[i]), rate, cfg.st);
        } catch (...) {
          rethrow_in_stage("stockwell", dataset.records[i].record_id);
        }
      });
      const st::NormalizationStats stats = st::fit_normalization(images);
      out.dims = {pre.size(), input[0], input[1], input[2]};
      for (const auto& im : images) {
        const st::Spectrogram s = st::assemble_spectrogram(im, stats);
        out.values.insert(out.values.end(), s.values.begin(), s.values.end());
      }
    }
    if (!options.out_dir.empty()) {
      const std::string name = options.stage == Stage::preprocess ? "preprocessed.dipd" : "spectrograms.dipd";
      io::write_file(options.out_dir + "/" + name, io::encode_dipd(out));
    }
    result.report_text = fmt::format("stage {} complete: {} records, tensor dims [{}]\n",
                                     options.stage == Stage::preprocess ? "preprocess" : "st-only",
                                     pre.size(), fmt::join(out.dims, ", "));
    result.report_csv = result.report_text;
    return result;
  }

  const std::vector<Task> tasks = build_tasks(dataset, cfg.eval.severity);
  const std::uint64_t seed = cfg.synth.seed;

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    TaskResult tr;
    tr.name = task.name;
    tr.slug = slugify(task.name);
    tr.class_names = task.class_names;

    const eval::FoldPlan plan =
        eval::make_folds(task.labels, cfg.eval.folds, cfg.eval.validation_fraction, derive_seed(seed, 0xf01d, t));
    const nn::ModelSpec spec = architecture_for(task, cfg.synth.case_kind, input, cfg.model);
    tr.nominal_layers = spec.nominal_layer_count();
    std::vector<FoldOutput> outputs(static_cast<std::size_t>(cfg.eval.folds));

    parallel_for(outputs.size(), options.threads, [&](std::size_t f) {
      const int fold = static_cast<int>(f);
      const auto train_idx = plan.train_indices(fold);
      const auto val_idx = plan.validation_indices(fold);
      const auto test_idx = plan.test_indices(fold);

      // ZCA and min-max statistics come from the fold's training partition
      // (train + validation); the test fold never contributes.
      std::vector<std::size_t> fit_idx = train_idx;
      fit_idx.insert(fit_idx.end(), val_idx.begin(), val_idx.end());
      std::sort(fit_idx.begin(), fit_idx.end());
      std::vector<Matrix> fit_records;
      for (auto i : fit_idx) fit_records.push_back(pre[task.records[i]]);
      dsp::WhiteningTransform zca;
      try {
        zca = dsp::fit_zca(fit_records, cfg.dsp.zca_epsilon);
      } catch (...) {
        rethrow_in_stage(fmt::format("zca, {} fold {}", task.name, fold + 1), 0);
      }

      std::vector<std::vector<Matrix>> images(task.records.size());
      for (std::size_t i = 0; i < task.records.size(); ++i) {
        const auto& rec = dataset.records[task.records[i]];
        try {
          images[i] = st_channels(dsp::apply_whitening(zca, pre[task.records[i]]), rate, cfg.st);
        } catch (...) {
          rethrow_in_stage("stockwell", rec.record_id);
        }
      }
      std::vector<std::vector<Matrix>> fit_images;
      for (auto i : fit_idx) fit_images.push_back(images[i]);
      const st::NormalizationStats stats = st::fit_normalization(fit_images);
      std::vector<st::Spectrogram> specs(task.records.size());
      for (std::size_t i = 0; i < task.records.size(); ++i) {
        specs[i] = st::assemble_spectrogram(images[i], stats);
        images[i].clear();
      }

      auto samples_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<nn::Sample> out;
        for (auto i : idx) out.push_back({&specs[i], task.labels[i]});
        return out;
      };
      const auto train_set = samples_of(train_idx);
      const auto val_set = samples_of(val_idx);
      const auto test_set = samples_of(test_idx);

      nn::TrainConfig tcfg = cfg.train;
      tcfg.seed = derive_seed(seed, 0x7a11 + t, f);
      std::string log = "epoch, lr, trainLoss, valAccuracy\n";
      nn::TrainResult trained = [&] {
        try {
          return nn::train(spec, train_set, val_set, tcfg, [&](const nn::EpochLog& e) {
            log += nn::format_log_line(e) + "\n";
            if (e.epoch % 10 == 0 || e.epoch == tcfg.max_epochs) {
              say(fmt::format("[{}] fold {}/{} epoch {}: loss {:.4f}, val acc {:.4f}", task.name,
                              fold + 1, cfg.eval.folds, e.epoch, e.train_loss, e.val_accuracy));
            }
          });
        } catch (...) {
          rethrow_in_stage(fmt::format("train, {} fold {}", task.name, fold + 1), 0);
        }
      }();

      eval::ConfusionMatrix cm(task.class_names);
      const auto predicted = nn::predict_labels(trained.model, test_set);
      for (std::size_t i = 0; i < test_set.size(); ++i) cm.add(test_set[i].label, predicted[i]);
      outputs[f] = {cm, trained.best_epoch, spec.nominal_layer_count()};

      if (!options.out_dir.empty()) {
        const std::string stem = fmt::format("{}_fold{}", tr.slug, fold + 1);
        io::write_file(options.out_dir + "/models/" + stem + ".dipw",
                       io::encode_dipw(io::capture(trained.model, tcfg, tcfg.seed)));
        io::write_file(options.out_dir + "/logs/" + stem + ".log", log);
      }
    });

    for (const auto& o : outputs) {
      tr.folds.push_back(o.confusion);
      tr.best_epochs.push_back(o.best_epoch);
    }
    tr.aggregate = eval::aggregate_folds(tr.folds);
    say(fmt::format("[{}] aggregated accuracy {:.4f}", task.name, tr.accuracy()));
    result.tasks.push_back(std::move(tr));
  }

  // Reports.
  const st::Band band = st::cropped_band(samples, rate);
  std::string head;
  head += "DIP evaluation report\n";
  head += fmt::format("case: {}\n", to_string(cfg.synth.case_kind));
  head += fmt::format("records: {} in {} classes, {} channels x {} samples at {} Hz\n",
                      dataset.records.size(), dataset.class_names.size(), channels, samples, rate);
  head += fmt::format("seed: {}\n", seed);
  head += fmt::format("filter: Chebyshev I, order {}, ripple {} dB, cutoff {} Hz, zero phase\n",
                      cfg.dsp.filter_order, cfg.dsp.ripple_db, cutoff_hz(cfg, rate));
  head += fmt::format("stockwell band: rows {}..{} ({:.4g} to {:.4g} Hz), full size {}x{}x{}\n", band.first_row,
                      band.last_row, band.low_hz, band.high_hz, band.last_row - band.first_row + 1,
                      samples, channels);
  if (cfg.st.freq_pool != 1 || cfg.st.time_pool != 1) {
    head += fmt::format("spectrogram resolution REDUCED to {}x{}x{} (block average: frequency /{}, time /{})\n",
                        input[1], input[2], input[0], cfg.st.freq_pool, cfg.st.time_pool);
  } else {
    head += fmt::format("spectrogram resolution: {}x{}x{}\n", input[1], input[2], input[0]);
  }
  head += fmt::format("cross-validation: {} folds, validation fraction {}\n", cfg.eval.folds,
                      cfg.eval.validation_fraction);
  head += fmt::format("training: SGDM momentum {}, batch {}, max epochs {}, lr {} x {} every {} epochs, L2 {}\n",
                      cfg.train.momentum, cfg.train.batch_size, cfg.train.max_epochs, cfg.train.learning_rate,
                      cfg.train.lr_drop_factor, cfg.train.lr_drop_period, cfg.train.l2_regularization);

  std::string text = head + "\n";
  std::string csv;
  for (const auto& tr : result.tasks) {
    text += fmt::format("== {} ({} layers) ==\n", tr.name, tr.nominal_layers);
    for (std::size_t f = 0; f < tr.folds.size(); ++f) {
      const std::string title = fmt::format("{}, fold {} (best epoch {})", tr.name, f + 1, tr.best_epochs[f]);
      text += eval::format_table(tr.folds[f], title) + "\n";
      csv += eval::format_csv(tr.folds[f], title) + "\n";
    }
    const std::string title = fmt::format("{}, aggregated over {} folds", tr.name, tr.folds.size());
    text += eval::format_table(tr.aggregate, title) + "\n";
    csv += eval::format_csv(tr.aggregate, title) + "\n";
  }

  if (result.tasks.size() > 1) {
    const double loc = result.tasks.front().accuracy();
    text += "== average index ==\n";
    text += fmt::format("{:<40}{:>14}{:>14}{:>14}\n", "task", "localization", "severity", "average");
    csv += "# average index\ntask,localization,severity,average\n";
    for (std::size_t t = 1; t < result.tasks.size(); ++t) {
      const double sev = result.tasks[t].accuracy();
      const double avg = eval::average_index(loc, sev);
      text += fmt::format("{:<40}{:>14.4f}{:>14.4f}{:>14.4f}\n", result.tasks[t].name, loc, sev, avg);
      csv += fmt::format("{},{:.4f},{:.4f},{:.4f}\n", result.tasks[t].name, loc, sev, avg);
    }
    text += "\n";
  }
  text += "== configuration ==\n" + dump_config(cfg);
  result.report_text = text;
  result.report_csv = csv;

  if (!options.out_dir.empty()) {
    io::write_file(options.out_dir + "/report.txt", result.report_text);
    io::write_file(options.out_dir + "/report.csv", result.report_csv);
  }
  return result;
}

}  // namespace dip::pipeline
