#pragma once

// Option resolution for the CLI: defaults < config file < flags. Every
// subcommand declares its keys once as a JSON object of defaults; flags are
// derived from the keys (underscores become dashes).

#include <cstdlib>
#include <fstream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fks/detail/csv.hpp"
#include "fks/error.hpp"

namespace fks::cli {

using json = nlohmann::json;

inline int default_threads() {
  if (const char* env = std::getenv("FKS_THREADS")) {
    const auto v = detail::parse_double(env);
    if (v && *v >= 1 && *v == static_cast<int>(*v)) return static_cast<int>(*v);
    throw Error(ErrorKind::InvalidConfig, "cli", "FKS_THREADS must be a positive integer");
  }
  return 1;
}

class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help, json defaults)
      : name_(name), defaults_(std::move(defaults)) {
    app_ = parent.add_subcommand(name, help);
    defaults_["seed"] = defaults_.value("seed", 1);
    defaults_["out"] = defaults_.value("out", std::string("."));
    app_->add_option("--config", config_path_, "JSON file with option values");
    for (auto& [key, value] : defaults_.items()) {
      std::string flag = "--" + key;
      for (char& c : flag) c = c == '_' ? '-' : c;
      if (key == "replications") flag = "-R," + flag;
      if (value.is_boolean()) {
        flags_[key] = app_->add_flag(flag)->description("default: " + value.dump());
      } else {
        options_[key] = app_->add_option(flag, raw_[key], "default: " + value.dump());
      }
    }
  }

  CLI::App* app() const { return app_; }
  const std::string& name() const { return name_; }

  /// Resolved option values; thread count is filled from FKS_THREADS unless
  /// set explicitly.
  json resolve() const {
    json out = defaults_;
    if (out.contains("threads")) out["threads"] = default_threads();
    if (!config_path_.empty()) merge_file(out);
    for (const auto& [key, opt] : options_) {
      if (opt->count() > 0) out[key] = convert(key, raw_.at(key), defaults_.at(key));
    }
    for (const auto& [key, opt] : flags_) {
      if (opt->count() > 0) out[key] = true;
    }
    return out;
  }

 private:
  void merge_file(json& out) const {
    std::ifstream in(config_path_);
    if (!in) throw Error(ErrorKind::IoError, "cli", "cannot open config '" + config_path_ + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::InvalidConfig, "cli", "config '" + config_path_ + "': " + e.what());
    }
    if (!file.is_object()) throw Error(ErrorKind::InvalidConfig, "cli", "config file must hold a JSON object");
    // a section named after the subcommand overrides top-level keys
    json flat = json::object();
    for (auto& [key, value] : file.items()) {
      if (!value.is_object()) flat[key] = value;
    }
    if (file.contains(name_) && file[name_].is_object()) {
      for (auto& [key, value] : file[name_].items()) flat[key] = value;
    }
    for (auto& [key, value] : flat.items()) {
      if (!defaults_.contains(key)) {
        throw Error(ErrorKind::InvalidConfig, "cli", "unknown config key '" + key + "' for " + name_);
      }
      const json& d = defaults_.at(key);
      const bool ok = (d.is_boolean() && value.is_boolean()) || (d.is_string() && value.is_string()) ||
                      (d.is_number_integer() && value.is_number_integer()) ||
                      (d.is_number_float() && value.is_number());
      if (!ok) throw Error(ErrorKind::InvalidConfig, "cli", "config key '" + key + "' has the wrong type");
      out[key] = d.is_number_float() ? json(value.get<double>()) : value;
    }
  }

  static json convert(const std::string& key, const std::string& text, const json& like) {
    if (like.is_string()) return text;
    const auto v = detail::parse_double(text);
    if (!v) throw Error(ErrorKind::InvalidConfig, "cli", "--" + key + " expects a number, got '" + text + "'");
    if (like.is_number_integer()) {
      if (*v != static_cast<double>(static_cast<long long>(*v))) {
        throw Error(ErrorKind::InvalidConfig, "cli", "--" + key + " expects an integer, got '" + text + "'");
      }
      return static_cast<long long>(*v);
    }
    return *v;
  }

  std::string name_;
  json defaults_;
  CLI::App* app_ = nullptr;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> options_;
  std::map<std::string, CLI::Option*> flags_;
};

}  // namespace fks::cli
