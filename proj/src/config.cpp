#include "dip/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dip/error.hpp"

namespace dip {

std::string to_string(CaseKind c) { return c == CaseKind::damage ? "damage" : "deterioration"; }

CaseKind parse_case(const std::string& s) {
  if (s == "deterioration") return CaseKind::deterioration;
  if (s == "damage") return CaseKind::damage;
  throw InvalidArgument("unknown case '" + s + "' (expected deterioration or damage)");
}

double SynthConfig::rate() const {
  return sampling_rate_hz.value_or(case_kind == CaseKind::damage ? 320.0 : 200.0);
}
double SynthConfig::mass() const {
  return story_mass_kg.value_or(case_kind == CaseKind::damage ? 6.4 : 1000.0);
}
double SynthConfig::f1() const {
  return fundamental_hz.value_or(case_kind == CaseKind::damage ? 20.0 : 3.0);
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("config: " + what);
  };
  require(synth.severity_story >= 0 && synth.severity_story <= 3, "synth.severity_story must lie in 0..3");
  require(synth.records_per_class >= 1, "synth.records_per_class must be >= 1");
  require(synth.rate() > 0.0, "synth.sampling_rate_hz must be > 0");
  require(synth.mass() > 0.0 && synth.f1() > 0.0, "synth mass and frequency must be > 0");
  require(synth.f1() < synth.rate() / 2.0, "synth.fundamental_hz must be below Nyquist");
  require(synth.damping_ratio > 0.0 && synth.damping_ratio < 1.0, "synth.damping_ratio must lie in (0, 1)");
  require(synth.adr >= 0.0 && synth.period_years >= 0.0, "synth.adr and period_years must be >= 0");
  require(synth.adr * synth.period_years < 1.0, "synth.adr * period_years must be < 1");
  require(synth.column_reduction >= 0.0 && synth.column_reduction < 1.0,
          "synth.column_reduction must lie in [0, 1)");
  require(synth.ground_rms >= 0.0, "synth.ground_rms must be >= 0");
  require(synth.bandwidth_fraction > 0.0 && synth.bandwidth_fraction < 1.0,
          "synth.bandwidth_fraction must lie in (0, 1)");
  require(synth.warmup_seconds >= 0.0, "synth.warmup_seconds must be >= 0");
  require(synth.segment_samples >= 8 && synth.segment_samples % 4 == 0,
          "synth.segment_samples must be a multiple of 4, at least 8");

  require(dsp.filter_order >= 1, "dsp.filter_order must be >= 1");
  require(dsp.ripple_db > 0.0, "dsp.ripple_db must be > 0");
  const double cutoff = dsp.cutoff_hz.value_or(0.2 * synth.rate());
  require(cutoff > 0.0 && cutoff < synth.rate() / 2.0, "dsp.cutoff_hz must lie in (0, Nyquist)");
  require(dsp.zca_epsilon >= 0.0, "dsp.zca_epsilon must be >= 0");

  require(st.freq_pool >= 1 && st.time_pool >= 1, "st pooling factors must be >= 1");
  require((synth.segment_samples / 4) % st.freq_pool == 0, "st.freq_pool must divide the band height");
  require(synth.segment_samples % st.time_pool == 0, "st.time_pool must divide the record length");

  train.validate();

  require(eval.folds >= 2, "eval.folds must be >= 2");
  require(eval.validation_fraction >= 0.0 && eval.validation_fraction < 1.0,
          "eval.validation_fraction must lie in [0, 1)");

  require(model.filters.size() == model.kernels.size() && !model.filters.empty(),
          "model.filters and model.kernels must be non-empty lists of equal length");
  for (int f : model.filters) require(f >= 1, "model.filters entries must be >= 1");
  for (int k : model.kernels) require(k >= 1 && k % 2 == 1, "model.kernels entries must be odd");
  require(model.pool_h >= 1 && model.pool_w >= 1, "model pool sizes must be >= 1");
  require(model.dropout > 0.0 && model.dropout < 1.0, "model.dropout must lie in (0, 1)");
  require(model.hidden >= 1 && model.hidden2 >= 1, "model hidden widths must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError("config: cannot parse '" + s + "' for " + key);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw FormatError("config: non-finite value for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw FormatError("config: expected true/false for " + key + ", got '" + s + "'");
}

std::vector<int> parse_list(const std::string& key, const std::string& raw) {
  std::vector<int> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, item));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

std::map<std::string, std::map<std::string, Setter>> setters() {
  std::map<std::string, std::map<std::string, Setter>> s;
  auto d = [](auto field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      field(c) = parse_number<std::remove_reference_t<decltype(field(c))>>(k, v);
    };
  };
  auto opt = [](auto field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      if (trim(v) == "auto") {
        field(c).reset();
      } else {
        field(c) = parse_number<double>(k, v);
      }
    };
  };

  auto& synth = s["synth"];
  synth["case"] = [](RunConfig& c, const std::string&, const std::string& v) {
    c.synth.case_kind = parse_case(trim(v));
  };
  synth["severity_story"] = d([](RunConfig& c) -> int& { return c.synth.severity_story; });
  synth["records_per_class"] = d([](RunConfig& c) -> int& { return c.synth.records_per_class; });
  synth["sampling_rate_hz"] = opt([](RunConfig& c) -> std::optional<double>& { return c.synth.sampling_rate_hz; });
  synth["story_mass_kg"] = opt([](RunConfig& c) -> std::optional<double>& { return c.synth.story_mass_kg; });
  synth["fundamental_hz"] = opt([](RunConfig& c) -> std::optional<double>& { return c.synth.fundamental_hz; });
  synth["damping_ratio"] = d([](RunConfig& c) -> double& { return c.synth.damping_ratio; });
  synth["adr"] = d([](RunConfig& c) -> double& { return c.synth.adr; });
  synth["period_years"] = d([](RunConfig& c) -> double& { return c.synth.period_years; });
  synth["column_reduction"] = d([](RunConfig& c) -> double& { return c.synth.column_reduction; });
  synth["ground_rms"] = d([](RunConfig& c) -> double& { return c.synth.ground_rms; });
  synth["bandwidth_fraction"] = d([](RunConfig& c) -> double& { return c.synth.bandwidth_fraction; });
  synth["snr_db"] = [](RunConfig& c, const std::string& k, const std::string& v) {
    if (trim(v) == "none") {
      c.synth.snr_db.reset();
    } else {
      c.synth.snr_db = parse_number<double>(k, v);
    }
  };
  synth["warmup_seconds"] = d([](RunConfig& c) -> double& { return c.synth.warmup_seconds; });
  synth["segment_samples"] = d([](RunConfig& c) -> int& { return c.synth.segment_samples; });
  synth["seed"] = d([](RunConfig& c) -> std::uint64_t& { return c.synth.seed; });

  auto& dsp = s["dsp"];
  dsp["filter_order"] = d([](RunConfig& c) -> int& { return c.dsp.filter_order; });
  dsp["ripple_db"] = d([](RunConfig& c) -> double& { return c.dsp.ripple_db; });
  dsp["cutoff_hz"] = opt([](RunConfig& c) -> std::optional<double>& { return c.dsp.cutoff_hz; });
  dsp["zca_epsilon"] = d([](RunConfig& c) -> double& { return c.dsp.zca_epsilon; });

  auto& st = s["st"];
  st["freq_pool"] = d([](RunConfig& c) -> int& { return c.st.freq_pool; });
  st["time_pool"] = d([](RunConfig& c) -> int& { return c.st.time_pool; });

  auto& train = s["train"];
  train["momentum"] = d([](RunConfig& c) -> double& { return c.train.momentum; });
  train["batch_size"] = d([](RunConfig& c) -> int& { return c.train.batch_size; });
  train["max_epochs"] = d([](RunConfig& c) -> int& { return c.train.max_epochs; });
  train["learning_rate"] = d([](RunConfig& c) -> double& { return c.train.learning_rate; });
  train["l2_regularization"] = d([](RunConfig& c) -> double& { return c.train.l2_regularization; });
  train["lr_drop_factor"] = d([](RunConfig& c) -> double& { return c.train.lr_drop_factor; });
  train["lr_drop_period"] = d([](RunConfig& c) -> int& { return c.train.lr_drop_period; });

  auto& eval = s["eval"];
  eval["folds"] = d([](RunConfig& c) -> int& { return c.eval.folds; });
  eval["validation_fraction"] = d([](RunConfig& c) -> double& { return c.eval.validation_fraction; });
  eval["severity"] = [](RunConfig& c, const std::string& k, const std::string& v) {
    c.eval.severity = parse_bool(k, v);
  };

  auto& model = s["model"];
  model["filters"] = [](RunConfig& c, const std::string& k, const std::string& v) {
    c.model.filters = parse_list(k, v);
  };
  model["kernels"] = [](RunConfig& c, const std::string& k, const std::string& v) {
    c.model.kernels = parse_list(k, v);
  };
  model["pool_h"] = d([](RunConfig& c) -> int& { return c.model.pool_h; });
  model["pool_w"] = d([](RunConfig& c) -> int& { return c.model.pool_w; });
  model["dropout"] = d([](RunConfig& c) -> double& { return c.model.dropout; });
  model["hidden"] = d([](RunConfig& c) -> int& { return c.model.hidden; });
  model["hidden2"] = d([](RunConfig& c) -> int& { return c.model.hidden2; });
  return s;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  const auto table = setters();
  RunConfig config;
  for (const auto& [section, keys] : tree) {
    const auto sec = table.find(section);
    if (sec == table.end()) {
      if (keys.empty() && !keys.data().empty()) {
        throw FormatError("config: key '" + section + "' outside any section");
      }
      throw FormatError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) {
        throw FormatError("config: unknown key '" + key + "' in [" + section + "]");
      }
      setter->second(config, section + "." + key, value.data());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NumericError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  auto opt = [](const std::optional<double>& v, const char* none) {
    return v ? fmt::format("{}", *v) : std::string(none);
  };
  auto list = [](const std::vector<int>& v) { return fmt::format("{}", fmt::join(v, ",")); };
  std::string s;
  s += "[synth]\n";
  s += fmt::format("case = {}\n", to_string(c.synth.case_kind));
  s += fmt::format("severity_story = {}\n", c.synth.severity_story);
  s += fmt::format("records_per_class = {}\n", c.synth.records_per_class);
  s += fmt::format("sampling_rate_hz = {}\n", opt(c.synth.sampling_rate_hz, "auto"));
  s += fmt::format("story_mass_kg = {}\n", opt(c.synth.story_mass_kg, "auto"));
  s += fmt::format("fundamental_hz = {}\n", opt(c.synth.fundamental_hz, "auto"));
  s += fmt::format("damping_ratio = {}\n", c.synth.damping_ratio);
  s += fmt::format("adr = {}\n", c.synth.adr);
  s += fmt::format("period_years = {}\n", c.synth.period_years);
  s += fmt::format("column_reduction = {}\n", c.synth.column_reduction);
  s += fmt::format("ground_rms = {}\n", c.synth.ground_rms);
  s += fmt::format("bandwidth_fraction = {}\n", c.synth.bandwidth_fraction);
  s += fmt::format("snr_db = {}\n", opt(c.synth.snr_db, "none"));
  s += fmt::format("warmup_seconds = {}\n", c.synth.warmup_seconds);
  s += fmt::format("segment_samples = {}\n", c.synth.segment_samples);
  s += fmt::format("seed = {}\n", c.synth.seed);
  s += "\n[dsp]\n";
  s += fmt::format("filter_order = {}\n", c.dsp.filter_order);
  s += fmt::format("ripple_db = {}\n", c.dsp.ripple_db);
  s += fmt::format("cutoff_hz = {}\n", opt(c.dsp.cutoff_hz, "auto"));
  s += fmt::format("zca_epsilon = {}\n", c.dsp.zca_epsilon);
  s += "\n[st]\n";
  s += fmt::format("freq_pool = {}\n", c.st.freq_pool);
  s += fmt::format("time_pool = {}\n", c.st.time_pool);
  s += "\n[train]\n";
  s += fmt::format("momentum = {}\n", c.train.momentum);
  s += fmt::format("batch_size = {}\n", c.train.batch_size);
  s += fmt::format("max_epochs = {}\n", c.train.max_epochs);
  s += fmt::format("learning_rate = {}\n", c.train.learning_rate);
  s += fmt::format("l2_regularization = {}\n", c.train.l2_regularization);
  s += fmt::format("lr_drop_factor = {}\n", c.train.lr_drop_factor);
  s += fmt::format("lr_drop_period = {}\n", c.train.lr_drop_period);
  s += "\n[eval]\n";
  s += fmt::format("folds = {}\n", c.eval.folds);
  s += fmt::format("validation_fraction = {}\n", c.eval.validation_fraction);
  s += fmt::format("severity = {}\n", c.eval.severity);
  s += "\n[model]\n";
  s += fmt::format("filters = {}\n", list(c.model.filters));
  s += fmt::format("kernels = {}\n", list(c.model.kernels));
  s += fmt::format("pool_h = {}\n", c.model.pool_h);
  s += fmt::format("pool_w = {}\n", c.model.pool_w);
  s += fmt::format("dropout = {}\n", c.model.dropout);
  s += fmt::format("hidden = {}\n", c.model.hidden);
  s += fmt::format("hidden2 = {}\n", c.model.hidden2);
  return s;
}

}  // namespace dip
