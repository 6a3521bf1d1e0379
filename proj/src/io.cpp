#include "ecd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ecd {

json to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::ParseError, "expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorKind::ParseError, "expected a number in array");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_json(const BbiHyperParams& hp) {
  return json{{"dt", hp.dt},     {"dV", hp.dV},     {"dE", hp.dE},
              {"T0", hp.T0},     {"T1", hp.T1},     {"Nb", hp.Nb},
              {"eps1", hp.eps1}, {"eps2", hp.eps2}, {"max_iters", hp.max_iters},
              {"adapt_dV", hp.adapt_dV}};
}

void update_from_json(BbiHyperParams& hp, const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "hyperparameters must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "dt") hp.dt = val.get<double>();
      else if (key == "dV") hp.dV = val.get<double>();
      else if (key == "dE") hp.dE = val.get<double>();
      else if (key == "T0") hp.T0 = val.get<long long>();
      else if (key == "T1") hp.T1 = val.get<long long>();
      else if (key == "Nb") hp.Nb = val.get<long long>();
      else if (key == "eps1") hp.eps1 = val.get<double>();
      else if (key == "eps2") hp.eps2 = val.get<double>();
      else if (key == "max_iters") hp.max_iters = val.get<long long>();
      else if (key == "adapt_dV") hp.adapt_dV = val.get<bool>();
      else throw Error(ErrorKind::ParseError, "unknown hyperparameter key '" + key + "'");
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, "bad value for '" + key + "': " + e.what());
    }
  }
}

json to_json(const EcdState& s) {
  return json{{"theta", to_json(s.theta)},
              {"pi", to_json(s.pi)},
              {"energy", s.energy},
              {"v_current", s.v_current},
              {"v_best", s.v_best},
              {"f_best", s.f_best},
              {"dV", s.dV},
              {"c0", s.c0},
              {"c1", s.c1},
              {"n_b", s.n_b},
              {"step", s.step},
              {"bounces", s.bounces},
              {"rng_state", s.rng.state()}};
}

EcdState state_from_json(const json& j) {
  try {
    EcdState s;
    s.theta = vector_from_json(j.at("theta"));
    s.pi = vector_from_json(j.at("pi"));
    s.energy = j.at("energy").get<double>();
    s.v_current = j.at("v_current").get<double>();
    s.v_best = j.at("v_best").get<double>();
    s.f_best = j.at("f_best").get<double>();
    s.dV = j.at("dV").get<double>();
    s.c0 = j.at("c0").get<long long>();
    s.c1 = j.at("c1").get<long long>();
    s.n_b = j.at("n_b").get<long long>();
    s.step = j.at("step").get<long long>();
    s.bounces = j.at("bounces").get<long long>();
    s.rng.set_state(j.at("rng_state").get<std::uint64_t>());
    if (s.theta.size() != s.pi.size())
      throw Error(ErrorKind::DimensionMismatch, "theta and pi differ in length");
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed state: ") + e.what());
  }
}

json to_json(const RunSummary& r) {
  return json{{"final_theta", to_json(r.final_theta)},
              {"final_v", r.final_v},
              {"final_f", r.final_f},
              {"best_f", r.best_f},
              {"final_dV", r.final_dV},
              {"stop_reason", std::string(to_string(r.stop_reason))},
              {"steps_taken", r.steps_taken},
              {"bounce_count", r.bounce_count},
              {"seed", r.seed}};
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : trace) {
    os << r.step << ',' << format_double(r.v) << ',' << format_double(r.pi_norm) << ','
       << format_double(r.speed) << ',' << format_double(r.energy_err) << ','
       << (r.bounce ? 1 : 0) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "' for writing");
  out << contents;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ecd
