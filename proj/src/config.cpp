/* Copyright 2026 The IWAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "iwan/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "iwan/error.hpp"

namespace iwan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::size_t> to_counts(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_unsigned(key, item));
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(lambda_upper > 0.0)) throw ConfigError("lambda_upper must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate_pretrain > 0.0)) throw ConfigError("learning_rate_pretrain must be > 0");
  if (!(learning_rate_adapt > 0.0)) throw ConfigError("learning_rate_adapt must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (weight_norm_mode.kind == NormalizationMode::Kind::ema &&
      !(weight_norm_mode.beta >= 0.0 && weight_norm_mode.beta < 1.0)) {
    throw ConfigError("weight_norm_mode: ema beta must be in [0, 1)");
  }
  if (feature_widths.empty()) throw ConfigError("feature_widths must name at least one width");
  for (auto w : feature_widths)
    if (w < 1) throw ConfigError("feature_widths entries must be >= 1");
  for (auto w : discriminator_hidden)
    if (w < 1) throw ConfigError("discriminator_hidden entries must be >= 1");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    out.emplace_back(std::move(key), trim(t.substr(eq + 1)));
  }
  return out;
}

std::string format_mode(const NormalizationMode& mode) {
  if (mode.kind == NormalizationMode::Kind::batch) return "batch";
  return "ema(" + fmt_double(mode.beta) + ")";
}

NormalizationMode parse_mode(const std::string& text) {
  const std::string t = trim(text);
  if (t == "batch") return NormalizationMode::batch();
  if (t == "ema") return NormalizationMode::ema(0.99);
  if (t.starts_with("ema(") && t.ends_with(")")) {
    return NormalizationMode::ema(to_double("weight_norm_mode", t.substr(4, t.size() - 5)));
  }
  throw ConfigError("weight_norm_mode: expected batch, ema or ema(<beta>), got '" + text + "'");
}

void apply_config_key(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key == "gamma") c.gamma = to_double(key, v);
  else if (key == "lambda_upper") c.lambda_upper = to_double(key, v);
  else if (key == "alpha") c.alpha = to_double(key, v);
  else if (key == "pretrain_epochs") c.pretrain_epochs = to_unsigned(key, v);
  else if (key == "adapt_epochs") c.adapt_epochs = to_unsigned(key, v);
  else if (key == "batch_size") c.batch_size = to_unsigned(key, v);
  else if (key == "learning_rate_pretrain") c.learning_rate_pretrain = to_double(key, v);
  else if (key == "learning_rate_adapt") c.learning_rate_adapt = to_double(key, v);
  else if (key == "momentum") c.momentum = to_double(key, v);
  else if (key == "weight_norm_mode") c.weight_norm_mode = parse_mode(v);
  else if (key == "weighted") c.weighted = to_bool(key, v);
  else if (key == "seed") c.seed = to_unsigned(key, v);
  else if (key == "feature_widths") c.feature_widths = to_counts(key, v);
  else if (key == "discriminator_hidden") {
    c.discriminator_hidden = v == "wide" ? kWideDiscriminatorHidden : to_counts(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  for (const auto& [k, v] : parse_key_values(text)) apply_config_key(c, k, v);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return parse_train_config(read_file(path));
}

KeyValues to_key_values(const TrainConfig& c) {
  return {
      {"gamma", fmt_double(c.gamma)},
      {"lambda_upper", fmt_double(c.lambda_upper)},
      {"alpha", fmt_double(c.alpha)},
      {"pretrain_epochs", std::to_string(c.pretrain_epochs)},
      {"adapt_epochs", std::to_string(c.adapt_epochs)},
      {"batch_size", std::to_string(c.batch_size)},
      {"learning_rate_pretrain", fmt_double(c.learning_rate_pretrain)},
      {"learning_rate_adapt", fmt_double(c.learning_rate_adapt)},
      {"momentum", fmt_double(c.momentum)},
      {"weight_norm_mode", format_mode(c.weight_norm_mode)},
      {"weighted", c.weighted ? "true" : "false"},
      {"seed", std::to_string(c.seed)},
      {"feature_widths", join(c.feature_widths)},
      {"discriminator_hidden", join(c.discriminator_hidden)},
  };
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [k, v] : to_key_values(config)) out += k + "=" + v + "\n";
  return out;
}

void apply_task_key(TaskSpec& s, const std::string& key, const std::string& v) {
  if (key == "source_classes") s.source_classes = static_cast<int>(to_unsigned(key, v));
  else if (key == "target_classes") s.target_classes = static_cast<int>(to_unsigned(key, v));
  else if (key == "samples_per_class_source") s.samples_per_class_source = to_unsigned(key, v);
  else if (key == "samples_per_class_target") s.samples_per_class_target = to_unsigned(key, v);
  else if (key == "dim") s.dim = to_unsigned(key, v);
  else if (key == "class_centers") {
    s.class_centers.clear();
    if (!trim(v).empty())
      for (const auto& c : split(v, ';')) s.class_centers.push_back(to_doubles(key, c));
  } else if (key == "center_radius") s.center_radius = to_double(key, v);
  else if (key == "class_stddev") s.class_stddev = to_double(key, v);
  else if (key == "shift") s.shift = to_doubles(key, v);
  else if (key == "rotation_degrees") s.rotation_degrees = to_double(key, v);
  else if (key == "seed") s.seed = to_unsigned(key, v);
  else throw ConfigError("unknown task key '" + key + "'");
}

TaskSpec parse_task_spec(const std::string& text) {
  TaskSpec s;
  for (const auto& [k, v] : parse_key_values(text)) apply_task_key(s, k, v);
  s.validate();
  return s;
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  return parse_task_spec(read_file(path));
}

KeyValues to_key_values(const TaskSpec& s) {
  std::string centers;
  for (std::size_t i = 0; i < s.class_centers.size(); ++i) {
    if (i) centers += ";";
    centers += join(s.class_centers[i]);
  }
  return {
      {"source_classes", std::to_string(s.source_classes)},
      {"target_classes", std::to_string(s.target_classes)},
      {"samples_per_class_source", std::to_string(s.samples_per_class_source)},
      {"samples_per_class_target", std::to_string(s.samples_per_class_target)},
      {"dim", std::to_string(s.dim)},
      {"class_centers", centers},
      {"center_radius", fmt_double(s.center_radius)},
      {"class_stddev", fmt_double(s.class_stddev)},
      {"shift", join(s.shift)},
      {"rotation_degrees", fmt_double(s.rotation_degrees)},
      {"seed", std::to_string(s.seed)},
  };
}

}  // namespace iwan
