#include "midas/config.hpp"

#include "midas/io.hpp"

#include <charconv>
#include <functional>
#include <sstream>

namespace midas {

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid value for " + key + ": '" + value + "' (expected true/false)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

MeanModel parse_mean_model(std::string_view s) {
  if (s == "BLR" || s == "blr") return MeanModel::blr;
  if (s == "GP" || s == "gp") return MeanModel::gp;
  if (s == "BART" || s == "bart") return MeanModel::bart;
  throw ConfigError("unknown mean model '" + std::string(s) + "' (expected BLR, GP or BART)");
}

VarianceModel parse_variance_model(std::string_view s) {
  if (s == "hom") return VarianceModel::hom;
  if (s == "sv") return VarianceModel::sv;
  throw ConfigError("unknown variance model '" + std::string(s) + "' (expected hom or sv)");
}

std::string_view mean_model_name(MeanModel m) {
  switch (m) {
    case MeanModel::blr: return "BLR";
    case MeanModel::gp: return "GP";
    case MeanModel::bart: return "BART";
  }
  return "?";
}

std::string_view variance_model_name(VarianceModel v) { return v == VarianceModel::hom ? "hom" : "sv"; }

void McmcSettings::validate() const {
  if (iters < 1) throw ConfigError("iters must be >= 1");
  if (burn < 0 || burn >= iters) throw ConfigError("burn must lie in [0, iters)");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (retained() < 1) throw ConfigError("mcmc settings retain no draws");
}

std::string ModelConfig::id() const {
  std::string midas(scheme_name(scheme));
  if (scheme == Scheme::alm || scheme == Scheme::leg || scheme == Scheme::ber || scheme == Scheme::fou)
    midas += std::to_string(degree);
  return std::string(mean_model_name(mean)) + "-" + std::string(variance_model_name(variance)) + "-" + midas + "-" +
         info_set;
}

void ModelConfig::validate() const {
  mcmc.validate();
  bart.validate();
  if (lf_lags < 0) throw ConfigError("lf_lags must be >= 0");
  if (hf_lags < 1) throw ConfigError("hf_lags must be >= 1");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (horizon.m != m) throw ConfigError("horizon was parsed for a different m");
  if (horizon.steps < 0) throw ConfigError("horizon must be >= 0");
  if (!(a0 > 0 && b0 > 0)) throw ConfigError("a0 and b0 must be positive");
  if (!(theta_prior_sd > 0)) throw ConfigError("theta_prior_sd must be positive");
  if (!(theta_step >= 0 && kernel_step >= 0)) throw ConfigError("random-walk steps must be >= 0");
  if (!(sv.offset > 0)) throw ConfigError("sv_offset must be positive");
  if (!(max_failure_rate >= 0 && max_failure_rate <= 1)) throw ConfigError("max_failure_rate must lie in [0, 1]");
  weights(theta_init);  // surfaces scheme/degree errors
}

MidasWeightMatrix<double> ModelConfig::weights(std::optional<XalmTheta> theta) const {
  if (scheme == Scheme::xalm && !theta) theta = theta_init;
  return build_weight_matrix<double>(scheme, hf_lags, degree, m, scheme == Scheme::xalm ? theta : std::nullopt);
}

std::map<std::string, std::string> ModelConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["mean"] = mean_model_name(mean);
  kv["variance"] = variance_model_name(variance);
  kv["scheme"] = scheme_name(scheme);
  kv["degree"] = std::to_string(degree);
  kv["info_set"] = info_set;
  kv["predictors"] = join(predictors);
  kv["lf_lags"] = std::to_string(lf_lags);
  kv["hf_lags"] = std::to_string(hf_lags);
  kv["m"] = std::to_string(m);
  kv["horizon"] = horizon.str();
  kv["iters"] = std::to_string(mcmc.iters);
  kv["burn"] = std::to_string(mcmc.burn);
  kv["thin"] = std::to_string(mcmc.thin);
  kv["seed"] = std::to_string(seed);
  kv["a0"] = format_double(a0);
  kv["b0"] = format_double(b0);
  kv["theta1_init"] = format_double(theta_init.theta1);
  kv["theta2_init"] = format_double(theta_init.theta2);
  kv["theta_prior_sd"] = format_double(theta_prior_sd);
  kv["theta_step"] = format_double(theta_step);
  kv["kernel_step"] = format_double(kernel_step);
  kv["adapt"] = adapt ? "true" : "false";
  kv["bart_trees"] = std::to_string(bart.trees);
  kv["bart_alpha"] = format_double(bart.alpha);
  kv["bart_beta"] = format_double(bart.beta);
  kv["bart_gamma"] = format_double(bart.gamma);
  kv["sv_offset"] = format_double(sv.offset);
  kv["max_failure_rate"] = format_double(max_failure_rate);
  return kv;
}

std::string ModelConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : to_key_values()) out += k + "=" + v + "\n";
  return out;
}

ModelConfig ModelConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  std::string horizon_text = "0";
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"mean", [&](auto&, auto& v) { c.mean = parse_mean_model(v); }},
      {"variance", [&](auto&, auto& v) { c.variance = parse_variance_model(v); }},
      {"scheme", [&](auto&, auto& v) { c.scheme = parse_scheme(v); }},
      {"degree", [&](auto& k, auto& v) { c.degree = parse_number<int>(k, v); }},
      {"info_set", [&](auto&, auto& v) { c.info_set = v; }},
      {"predictors", [&](auto&, auto& v) { c.predictors = split_list(v); }},
      {"lf_lags", [&](auto& k, auto& v) { c.lf_lags = parse_number<int>(k, v); }},
      {"hf_lags", [&](auto& k, auto& v) { c.hf_lags = parse_number<int>(k, v); }},
      {"m", [&](auto& k, auto& v) { c.m = parse_number<int>(k, v); }},
      {"horizon", [&](auto&, auto& v) { horizon_text = v; }},
      {"iters", [&](auto& k, auto& v) { c.mcmc.iters = parse_number<int>(k, v); }},
      {"burn", [&](auto& k, auto& v) { c.mcmc.burn = parse_number<int>(k, v); }},
      {"thin", [&](auto& k, auto& v) { c.mcmc.thin = parse_number<int>(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"a0", [&](auto& k, auto& v) { c.a0 = parse_number<double>(k, v); }},
      {"b0", [&](auto& k, auto& v) { c.b0 = parse_number<double>(k, v); }},
      {"theta1_init", [&](auto& k, auto& v) { c.theta_init.theta1 = parse_number<double>(k, v); }},
      {"theta2_init", [&](auto& k, auto& v) { c.theta_init.theta2 = parse_number<double>(k, v); }},
      {"theta_prior_sd", [&](auto& k, auto& v) { c.theta_prior_sd = parse_number<double>(k, v); }},
      {"theta_step", [&](auto& k, auto& v) { c.theta_step = parse_number<double>(k, v); }},
      {"kernel_step", [&](auto& k, auto& v) { c.kernel_step = parse_number<double>(k, v); }},
      {"adapt", [&](auto& k, auto& v) { c.adapt = parse_bool(k, v); }},
      {"bart_trees", [&](auto& k, auto& v) { c.bart.trees = parse_number<int>(k, v); }},
      {"bart_alpha", [&](auto& k, auto& v) { c.bart.alpha = parse_number<double>(k, v); }},
      {"bart_beta", [&](auto& k, auto& v) { c.bart.beta = parse_number<double>(k, v); }},
      {"bart_gamma", [&](auto& k, auto& v) { c.bart.gamma = parse_number<double>(k, v); }},
      {"sv_offset", [&](auto& k, auto& v) { c.sv.offset = parse_number<double>(k, v); }},
      {"max_failure_rate", [&](auto& k, auto& v) { c.max_failure_rate = parse_number<double>(k, v); }},
  };
  for (const auto& [k, v] : kv) {
    const auto it = setters.find(k);
    if (it == setters.end()) throw ConfigError("unknown config key '" + k + "'");
    it->second(k, v);
  }
  c.horizon = Horizon::parse(horizon_text, c.m);
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) { return from_key_values(read_key_values(path)); }

}  // namespace midas
