// Copyright 2026 The prepsearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prepsearch/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "prepsearch/baselines.hpp"
#include "prepsearch/common.hpp"

namespace prepsearch {

namespace pt = boost::property_tree;

int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw == 0 ? 1U : hw, 1U, 16U));
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"csv", "label", "train_fraction", "split_seed"}},
      {"synth",
       {"n_rows", "n_numeric", "n_categorical", "n_classes", "missing_rate",
        "outlier_rate", "seed"}},
      {"library", {"operators"}},
      {"search",
       {"method", "length", "n_perm", "n_perm_refine", "n_pretrain", "seed", "workers",
        "allow_null_category", "bandit_batch", "use_bandits", "reselect_prefix",
        "exploration", "budget", "suffix_mode", "exhaustive_cap", "final_eval"}},
      {"learner", {"learning_rate", "iterations", "l2"}},
      {"output", {"report", "cache"}},
      {"compare", {"methods"}},
  };
  return keys;
}

[[noreturn]] void bad_value(const std::string& where, const std::string& value,
                            const std::string& expected) {
  throw Error("ConfigError", where + ": '" + value + "' is not " + expected);
}

template <typename T>
T parse_integer(const std::string& where, const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(where, s, "an integer");
  return v;
}

double parse_double(const std::string& where, const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    bad_value(where, s, "a finite number");
  }
  return v;
}

bool parse_bool(const std::string& where, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(where, s, "a boolean");
}

std::vector<std::string> parse_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void check_method(const std::string& where, const std::string& method) {
  static const std::set<std::string> plain = {"shapleypipe", "random", "greedy",
                                              "exhaustive", "algorithm1"};
  if (plain.contains(method)) return;
  if (method.rfind("ablation:", 0) == 0) {
    parse_ablation(method.substr(9));
    return;
  }
  bad_value(where, method, "a known method");
}

}  // namespace

std::pair<std::string, std::optional<std::uint64_t>> split_method(const std::string& spec) {
  const auto at = spec.find('@');
  if (at == std::string::npos) return {spec, std::nullopt};
  return {spec.substr(0, at),
          parse_integer<std::uint64_t>("compare.methods", spec.substr(at + 1))};
}

RunConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("ConfigError", std::string("config syntax: ") + e.what());
  }

  RunConfig cfg;
  cfg.search.workers = default_workers();
  // The INI reader drops sections without keys; a bare [synth] still
  // selects synthetic data with default settings.
  bool has_synth = false;
  {
    std::istringstream lines(ini_text);
    std::string line;
    while (std::getline(lines, line)) {
      if (boost::algorithm::trim_copy(line) == "[synth]") has_synth = true;
    }
  }
  if (has_synth) cfg.synth = SynthSpec{};
  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      throw Error("ConfigError", "unknown config section [" + section + "]");
    }
    if (!body.data().empty()) {
      throw Error("ConfigError", "key '" + section + "' must sit inside a section");
    }
    for (const auto& [key, node] : body) {
      if (!known->second.contains(key)) {
        throw Error("ConfigError", "unknown config key " + section + "." + key);
      }
      const std::string where = section + "." + key;
      const std::string v = boost::algorithm::trim_copy(node.data());
      if (section == "data") {
        if (key == "csv") cfg.csv_path = v;
        else if (key == "label") cfg.label_column = v;
        else if (key == "train_fraction") cfg.train_fraction = parse_double(where, v);
        else if (key == "split_seed") cfg.split_seed = parse_integer<std::uint64_t>(where, v);
      } else if (section == "synth") {
        SynthSpec& s = *cfg.synth;
        if (key == "n_rows") s.n_rows = parse_integer<std::size_t>(where, v);
        else if (key == "n_numeric") s.n_numeric = parse_integer<std::size_t>(where, v);
        else if (key == "n_categorical") s.n_categorical = parse_integer<std::size_t>(where, v);
        else if (key == "n_classes") s.n_classes = parse_integer<int>(where, v);
        else if (key == "missing_rate") s.missing_rate = parse_double(where, v);
        else if (key == "outlier_rate") s.outlier_rate = parse_double(where, v);
        else if (key == "seed") s.seed = parse_integer<std::uint64_t>(where, v);
      } else if (section == "library") {
        cfg.operators = parse_list(v);
      } else if (section == "search") {
        SearchConfig& s = cfg.search;
        if (key == "method") cfg.method = v;
        else if (key == "length") s.length = parse_integer<std::size_t>(where, v);
        else if (key == "n_perm") s.n_perm = parse_integer<std::size_t>(where, v);
        else if (key == "n_perm_refine") s.n_perm_refine = parse_integer<std::size_t>(where, v);
        else if (key == "n_pretrain") s.n_pretrain = parse_integer<std::size_t>(where, v);
        else if (key == "seed") s.seed = parse_integer<std::uint64_t>(where, v);
        else if (key == "workers") s.workers = parse_integer<int>(where, v);
        else if (key == "allow_null_category") s.allow_null_category = parse_bool(where, v);
        else if (key == "bandit_batch") s.bandit_batch = parse_integer<std::size_t>(where, v);
        else if (key == "use_bandits") s.use_bandits = parse_bool(where, v);
        else if (key == "reselect_prefix") s.reselect_prefix = parse_bool(where, v);
        else if (key == "exploration") s.exploration = parse_double(where, v);
        else if (key == "budget") cfg.budget = parse_integer<std::uint64_t>(where, v);
        else if (key == "exhaustive_cap") cfg.exhaustive_cap = parse_integer<std::uint64_t>(where, v);
        else if (key == "final_eval") cfg.final_eval = parse_bool(where, v);
        else if (key == "suffix_mode") {
          if (v == "sampled") cfg.suffix_mode = SuffixMode::Sampled;
          else if (v == "exhaustive") cfg.suffix_mode = SuffixMode::Exhaustive;
          else bad_value(where, v, "'sampled' or 'exhaustive'");
        }
      } else if (section == "learner") {
        if (key == "learning_rate") cfg.learner.learning_rate = parse_double(where, v);
        else if (key == "iterations") cfg.learner.iterations = parse_integer<int>(where, v);
        else if (key == "l2") cfg.learner.l2 = parse_double(where, v);
      } else if (section == "output") {
        if (key == "report") cfg.report_path = v;
        else if (key == "cache") cfg.cache_path = v;
      } else if (section == "compare") {
        cfg.compare_methods = parse_list(v);
      }
    }
  }

  if (cfg.csv_path.empty() == !has_synth) {
    throw Error("ConfigError",
                "exactly one dataset source is required: [data] csv or a [synth] section");
  }
  check_method("search.method", cfg.method);
  for (const std::string& m : cfg.compare_methods) check_method("compare.methods", split_method(m).first);
  const SearchConfig& s = cfg.search;
  if (s.length == 0 || s.n_perm == 0 || s.n_perm_refine == 0 || s.bandit_batch == 0 ||
      cfg.budget == 0) {
    throw Error("ConfigError",
                "length, n_perm, n_perm_refine, bandit_batch and budget must be positive");
  }
  if (s.workers < 1) throw Error("ConfigError", "search.workers must be >= 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error("ConfigError", "data.train_fraction must lie in (0, 1)");
  }
  if (cfg.learner.iterations < 1 || !(cfg.learner.learning_rate > 0.0) || cfg.learner.l2 < 0.0) {
    throw Error("ConfigError", "learner settings out of range");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", "cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
config_entries(const RunConfig& cfg) {
  using Section = std::vector<std::pair<std::string, std::string>>;
  std::vector<std::pair<std::string, Section>> out;

  Section data;
  if (!cfg.csv_path.empty()) data.emplace_back("csv", cfg.csv_path);
  data.emplace_back("label", cfg.label_column);
  data.emplace_back("train_fraction", format_double(cfg.train_fraction));
  data.emplace_back("split_seed", std::to_string(cfg.effective_split_seed()));
  out.emplace_back("data", std::move(data));

  if (cfg.synth) {
    const SynthSpec& s = *cfg.synth;
    out.emplace_back("synth", Section{
                                  {"n_rows", std::to_string(s.n_rows)},
                                  {"n_numeric", std::to_string(s.n_numeric)},
                                  {"n_categorical", std::to_string(s.n_categorical)},
                                  {"n_classes", std::to_string(s.n_classes)},
                                  {"missing_rate", format_double(s.missing_rate)},
                                  {"outlier_rate", format_double(s.outlier_rate)},
                                  {"seed", std::to_string(s.seed)},
                              });
  }
  out.emplace_back("library", Section{{"operators", join(cfg.operators)}});

  const SearchConfig& s = cfg.search;
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  out.emplace_back(
      "search",
      Section{
          {"method", cfg.method},
          {"length", std::to_string(s.length)},
          {"n_perm", std::to_string(s.n_perm)},
          {"n_perm_refine", std::to_string(s.n_perm_refine)},
          {"n_pretrain", std::to_string(s.n_pretrain)},
          {"seed", std::to_string(s.seed)},
          {"workers", std::to_string(s.workers)},
          {"allow_null_category", b(s.allow_null_category)},
          {"bandit_batch", std::to_string(s.bandit_batch)},
          {"use_bandits", b(s.use_bandits)},
          {"reselect_prefix", b(s.reselect_prefix)},
          {"exploration", format_double(s.exploration)},
          {"budget", std::to_string(cfg.budget)},
          {"suffix_mode", cfg.suffix_mode == SuffixMode::Sampled ? "sampled" : "exhaustive"},
          {"exhaustive_cap", std::to_string(cfg.exhaustive_cap)},
          {"final_eval", b(cfg.final_eval)},
      });
  out.emplace_back("learner", Section{
                                  {"learning_rate", format_double(cfg.learner.learning_rate)},
                                  {"iterations", std::to_string(cfg.learner.iterations)},
                                  {"l2", format_double(cfg.learner.l2)},
                              });
  Section output;
  if (!cfg.report_path.empty()) output.emplace_back("report", cfg.report_path);
  if (!cfg.cache_path.empty()) output.emplace_back("cache", cfg.cache_path);
  if (!output.empty()) out.emplace_back("output", std::move(output));
  if (!cfg.compare_methods.empty()) {
    out.emplace_back("compare", Section{{"methods", join(cfg.compare_methods)}});
  }
  return out;
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, entries] : config_entries(cfg)) {
    if (!first) os << '\n';
    first = false;
    os << '[' << section << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
  }
  return os.str();
}

}  // namespace prepsearch
