#include "gbdt/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gbdt/errors.hpp"

namespace gbdt {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json matrix_to_json(const CMatrix& M) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      row.push_back(Json::array({M(r, c).real(), M(r, c).imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const Json& j, const std::string& what,
                         Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array()) throw InputError(what + ": expected an array of rows");
  const auto nr = static_cast<Eigen::Index>(j.size());
  Eigen::Index nc = -1;
  for (const auto& row : j) {
    if (!row.is_array()) throw InputError(what + ": each row must be an array");
    const auto len = static_cast<Eigen::Index>(row.size());
    if (nc < 0) nc = len;
    if (len != nc) throw InputError(what + ": rows have different lengths");
  }
  if (nc < 0) nc = cols >= 0 ? cols : 0;
  if ((rows >= 0 && nr != rows) || (cols >= 0 && nc != cols)) {
    std::ostringstream msg;
    msg << what << ": expected " << rows << " x " << cols << ", got " << nr
        << " x " << nc;
    throw InputError(msg.str());
  }
  CMatrix M(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (Eigen::Index c = 0; c < nc; ++c) {
      const Json& e = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number()) {
        std::ostringstream msg;
        msg << what << ": entry (" << r << ", " << c
            << ") is not a [re, im] pair";
        throw InputError(msg.str());
      }
      M(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return M;
}

Json triple_to_json(const GBDTTriple& t) {
  Json j;
  j["n"] = t.n();
  j["m1"] = t.sig.m1;
  j["m2"] = t.sig.m2;
  j["A"] = matrix_to_json(t.A);
  j["S0"] = matrix_to_json(t.S0);
  j["Pi0"] = matrix_to_json(t.Pi0);
  return j;
}

GBDTTriple triple_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("triple: expected a JSON object");
  for (const char* key : {"n", "m1", "m2", "A", "S0", "Pi0"}) {
    if (!j.contains(key)) {
      throw InputError(std::string("triple: missing field '") + key + "'");
    }
  }
  for (const char* key : {"n", "m1", "m2"}) {
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0) {
      throw InputError(std::string("triple: '") + key +
                       "' must be a nonnegative integer");
    }
  }
  const auto n = j["n"].get<Eigen::Index>();
  GBDTTriple t;
  t.sig = {j["m1"].get<int>(), j["m2"].get<int>()};
  if (n < 1 || t.sig.m() < 1) {
    throw InputError("triple: need n >= 1 and m1 + m2 >= 1");
  }
  t.A = matrix_from_json(j["A"], "triple.A", n, n);
  t.S0 = matrix_from_json(j["S0"], "triple.S0", n, n);
  t.Pi0 = matrix_from_json(j["Pi0"], "triple.Pi0", n, t.sig.m());
  try {
    t.validate_shapes();
  } catch (const Error& e) {
    throw InputError(std::string("triple: ") + e.what());
  }
  return t;
}

GBDTTriple load_triple(const std::string& path) {
  return triple_from_json(load_json(path));
}

Json identity_check_to_json(const IdentityCheck& c) {
  Json j;
  j["residual"] = c.residual;
  j["bound"] = c.bound;
  j["ok"] = c.ok;
  return j;
}

Json report_to_json(const Report& r) {
  Json out = Json::array();
  for (const Check& c : r.checks) {
    Json j;
    j["name"] = c.name;
    j["residual"] = std::isfinite(c.residual) ? Json(c.residual) : Json();
    j["bound"] = c.bound ? Json(*c.bound) : Json();
    j["pass"] = c.pass;
    j["context"] = c.context;
    out.push_back(std::move(j));
  }
  return out;
}

void write_field_csv(std::ostream& os, const SolutionField& f) {
  os << "x,t,block,row,col,re,im\n";
  const auto emit = [&](double x, double t, const char* block,
                        const CMatrix& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) {
        os << format_number(x) << ',' << format_number(t) << ',' << block
           << ',' << r << ',' << c << ',' << format_number(M(r, c).real())
           << ',' << format_number(M(r, c).imag()) << '\n';
      }
    }
  };
  const double t_first = f.ts.empty() ? 0.0 : f.ts.front();
  for (std::size_t ix = 0; ix < f.xs.size(); ++ix) {
    for (std::size_t it = 0; it < f.ts.size(); ++it) {
      emit(f.xs[ix], f.ts[it], "Y", f.y(ix, it));
    }
    emit(f.xs[ix], t_first, "Hcal", f.Hcal[ix]);
  }
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed JSON in '" + path + "': " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace gbdt
