#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsqp/dataset.hpp"
#include "fairsqp/fairness.hpp"
#include "fairsqp/model.hpp"
#include "fairsqp/sqp.hpp"

namespace fairsqp {

using nlohmann::json;

inline std::uint64_t fnv1a(const void* data, size_t n,
                           std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

// Checksum over the raw IEEE-754 bytes, so equality means bit-identical
// weights.
inline std::uint64_t weight_checksum(const Eigen::VectorXd& w) {
  return fnv1a(w.data(), static_cast<size_t>(w.size()) * sizeof(double));
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream oss;
  oss << "0x" << std::hex << v;
  return oss.str();
}

// NaN-tolerant numeric field round trip: JSON has no NaN, so undefined
// metrics serialize as null and come back as NaN.
inline json num_or_null(double v) { return std::isnan(v) ? json() : json(v); }
inline double num_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json to_json(const DatasetStats& st) {
  json j;
  j["n"] = st.n;
  j["n_s0"] = st.n_s0;
  j["n_s1"] = st.n_s1;
  j["n_y0"] = st.n_y0;
  j["n_y1"] = st.n_y1;
  j["n_y1_s1"] = st.n_y1_s1;
  j["n_y1_s0"] = st.n_y1_s0;
  j["n_y0_s1"] = st.n_y0_s1;
  j["n_y0_s0"] = st.n_y0_s0;
  j["p_y1_given_s1"] = num_or_null(st.p_y1_given_s1);
  j["p_y1_given_s0"] = num_or_null(st.p_y1_given_s0);
  j["p_s1_given_y1"] = num_or_null(st.p_s1_given_y1);
  j["p_s0_given_y1"] = num_or_null(st.p_s0_given_y1);
  j["dp_rote"] = num_or_null(st.dp_rote);
  j["eo_rote"] = num_or_null(st.eo_rote);
  j["di_rote"] = num_or_null(st.di_rote);
  j["all_zero_acc"] = num_or_null(st.all_zero_acc);
  j["all_one_acc"] = num_or_null(st.all_one_acc);
  return j;
}

inline json to_json(const FairnessReport& r) {
  json j;
  j["c_dp_surrogate"] = num_or_null(r.c_dp_surrogate);
  j["c_dp_hard"] = num_or_null(r.c_dp_hard);
  j["c_di_surrogate"] = num_or_null(r.c_di_surrogate);
  j["c_di_hard"] = num_or_null(r.c_di_hard);
  j["c_ei_surrogate"] = num_or_null(r.c_ei_surrogate);
  j["c_ei_hard"] = num_or_null(r.c_ei_hard);
  j["delta_hat_surrogate"] = num_or_null(r.delta_hat_surrogate);
  j["delta_hat_hard"] = num_or_null(r.delta_hat_hard);
  j["delta_hat_ei_surrogate"] = num_or_null(r.delta_hat_ei_surrogate);
  j["delta_hat_ei_hard"] = num_or_null(r.delta_hat_ei_hard);
  j["c_cov"] = num_or_null(r.c_cov);
  j["p0_hard"] = num_or_null(r.p0_hard);
  j["p1_hard"] = num_or_null(r.p1_hard);
  return j;
}

inline FairnessReport fairness_from_json(const json& j) {
  FairnessReport r;
  r.c_dp_surrogate = num_from(j.at("c_dp_surrogate"));
  r.c_dp_hard = num_from(j.at("c_dp_hard"));
  r.c_di_surrogate = num_from(j.at("c_di_surrogate"));
  r.c_di_hard = num_from(j.at("c_di_hard"));
  r.c_ei_surrogate = num_from(j.at("c_ei_surrogate"));
  r.c_ei_hard = num_from(j.at("c_ei_hard"));
  r.delta_hat_surrogate = num_from(j.at("delta_hat_surrogate"));
  r.delta_hat_hard = num_from(j.at("delta_hat_hard"));
  r.delta_hat_ei_surrogate = num_from(j.at("delta_hat_ei_surrogate"));
  r.delta_hat_ei_hard = num_from(j.at("delta_hat_ei_hard"));
  r.c_cov = num_from(j.at("c_cov"));
  r.p0_hard = num_from(j.at("p0_hard"));
  r.p1_hard = num_from(j.at("p1_hard"));
  return r;
}

// Model checkpoint, format "fairsqp-model-v1": layer sizes, activation
// slope, flat weights (JSON doubles round-trip exactly), byte checksum.
inline void save_model(const std::string& path, const MlpSpec& spec, const Eigen::VectorXd& w) {
  json j;
  j["format"] = "fairsqp-model-v1";
  j["layer_sizes"] = spec.widths;
  j["leaky_slope"] = spec.leak;
  j["weights"] = std::vector<double>(w.data(), w.data() + w.size());
  j["weight_checksum"] = hex64(weight_checksum(w));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot write " + path);
  out << j.dump(2) << "\n";
}

inline std::pair<MlpSpec, Eigen::VectorXd> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot read " + path);
  json j = json::parse(in);
  if (j.value("format", "") != "fairsqp-model-v1")
    throw std::runtime_error("load_model: " + path + " has unknown format \"" +
                             j.value("format", "") + "\"");
  MlpSpec spec;
  spec.widths = j.at("layer_sizes").get<std::vector<Index>>();
  spec.leak = j.at("leaky_slope").get<double>();
  spec.validate();
  const auto vals = j.at("weights").get<std::vector<double>>();
  if (static_cast<Index>(vals.size()) != param_count(spec))
    throw std::runtime_error("load_model: weight count does not match layer sizes");
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  const std::string expect = j.at("weight_checksum").get<std::string>();
  if (hex64(weight_checksum(w)) != expect)
    throw std::runtime_error("load_model: checksum mismatch in " + path);
  return {spec, w};
}

inline json to_json(const TraceRecord& rec) {
  json j;
  j["iteration"] = rec.iteration;
  j["f"] = num_or_null(rec.f);
  j["violation_l1"] = num_or_null(rec.violation_l1);
  j["tau"] = rec.tau;
  j["lr"] = rec.lr;
  j["active"] = rec.active;
  return j;
}

// One JSON object per line per iteration.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("TraceWriter: cannot write " + path);
  }
  void write(const TraceRecord& rec) { out_ << to_json(rec).dump() << "\n"; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace fairsqp
