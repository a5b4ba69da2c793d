#include "gbdt/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>

#include "gbdt/errors.hpp"

namespace gbdt {

namespace {

ExpChannel parse_channel(const std::string& raw) {
  std::string s;
  std::remove_copy_if(raw.begin(), raw.end(), std::back_inserter(s),
                      [](unsigned char ch) { return std::isspace(ch); });
  static const std::string num = R"(([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?))";
  static const std::regex constant("^([+-]?)" + num + "$");
  static const std::regex full("^([+-]?)" + num + "([+-])" + num +
                               R"(\*exp\(([+-]?))" + num + R"(\*x\)$)");
  std::smatch mt;
  ExpChannel ch;
  const auto sign = [](const std::string& g) { return g == "-" ? -1.0 : 1.0; };
  if (std::regex_match(s, mt, constant)) {
    ch.c = sign(mt[1]) * std::stod(mt[2]);
    return ch;
  }
  if (std::regex_match(s, mt, full)) {
    ch.c = sign(mt[1]) * std::stod(mt[2]);
    ch.d = sign(mt[3]) * std::stod(mt[4]);
    ch.r = sign(mt[5]) * std::stod(mt[6]);
    return ch;
  }
  throw InputError("hamiltonian: cannot parse channel '" + raw +
                   "' (expected c or c+d*exp(r*x))");
}

struct Table {
  std::vector<double> xs;
  std::vector<CMatrix> values;
};

}  // namespace

HamiltonianField::HamiltonianField(int dim, Eval eval, std::string description,
                                   std::string interpolation)
    : dim_(dim),
      eval_(std::move(eval)),
      description_(std::move(description)),
      interpolation_(std::move(interpolation)) {
  if (dim_ <= 0) throw InputError("hamiltonian: dimension must be positive");
  if (!eval_) throw InputError("hamiltonian: empty evaluator");
}

HamiltonianField HamiltonianField::identity(int dim) {
  return HamiltonianField(
      dim, [dim](double) { return CMatrix(CMatrix::Identity(dim, dim)); },
      "identity");
}

HamiltonianField HamiltonianField::diagonal(std::vector<ExpChannel> channels) {
  if (channels.empty()) throw InputError("hamiltonian: no diagonal channels");
  std::ostringstream desc;
  desc << "diag:";
  for (std::size_t k = 0; k < channels.size(); ++k) {
    if (k) desc << ",";
    desc << channels[k].c << (channels[k].d < 0 ? "-" : "+")
         << std::abs(channels[k].d) << "*exp(" << channels[k].r << "*x)";
  }
  const int dim = static_cast<int>(channels.size());
  return HamiltonianField(
      dim,
      [ch = std::move(channels)](double x) {
        CMatrix H = CMatrix::Zero(ch.size(), ch.size());
        for (std::size_t k = 0; k < ch.size(); ++k) H(k, k) = ch[k](x);
        return H;
      },
      desc.str());
}

HamiltonianField HamiltonianField::parse(const std::string& spec, int dim) {
  if (spec == "identity") return identity(dim);
  const std::string prefix = "diag:";
  if (spec.rfind(prefix, 0) == 0) {
    std::vector<ExpChannel> channels;
    std::stringstream ss(spec.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) channels.push_back(parse_channel(item));
    if (static_cast<int>(channels.size()) != dim) {
      std::ostringstream msg;
      msg << "hamiltonian: " << channels.size() << " channels given, m = "
          << dim;
      throw InputError(msg.str());
    }
    return diagonal(std::move(channels));
  }
  throw InputError("hamiltonian: unknown specification '" + spec + "'");
}

HamiltonianField HamiltonianField::from_csv(std::istream& in) {
  auto table = std::make_shared<Table>();
  std::string line;
  std::size_t width = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (table->xs.empty() && width == 0) continue;  // header
      throw InputError("hamiltonian csv: non-numeric cell on line " +
                       std::to_string(lineno));
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw InputError("hamiltonian csv: ragged row on line " +
                       std::to_string(lineno));
    }
    if (!table->xs.empty() && !(row[0] > table->xs.back())) {
      throw InputError("hamiltonian csv: x not strictly increasing on line " +
                       std::to_string(lineno));
    }
    table->xs.push_back(row[0]);
    table->values.emplace_back();
    const std::size_t entries = width - 1;
    const int real_dim = static_cast<int>(std::lround(std::sqrt(entries)));
    const int cplx_dim = static_cast<int>(std::lround(std::sqrt(entries / 2)));
    CMatrix& H = table->values.back();
    if (static_cast<std::size_t>(real_dim * real_dim) == entries) {
      H.resize(real_dim, real_dim);
      for (int r = 0; r < real_dim; ++r)
        for (int c = 0; c < real_dim; ++c) H(r, c) = row[1 + r * real_dim + c];
    } else if (static_cast<std::size_t>(2 * cplx_dim * cplx_dim) == entries) {
      H.resize(cplx_dim, cplx_dim);
      for (int r = 0; r < cplx_dim; ++r)
        for (int c = 0; c < cplx_dim; ++c) {
          const std::size_t k = 1 + 2 * (r * cplx_dim + c);
          H(r, c) = Complex(row[k], row[k + 1]);
        }
    } else {
      throw InputError("hamiltonian csv: row width is not 1 + m*m or 1 + 2*m*m");
    }
  }
  if (table->xs.size() < 2) {
    throw InputError("hamiltonian csv: need at least two rows");
  }
  const int dim = static_cast<int>(table->values.front().rows());
  std::ostringstream desc;
  desc << "csv table, " << table->xs.size() << " rows on [" << table->xs.front()
       << ", " << table->xs.back() << "]";
  return HamiltonianField(
      dim,
      [table](double x) -> CMatrix {
        const auto& xs = table->xs;
        if (x < xs.front() || x > xs.back()) {
          std::ostringstream msg;
          msg << "hamiltonian csv: x = " << x << " outside table range";
          throw InputError(msg.str());
        }
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        if (it == xs.end()) return table->values.back();
        const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        const std::size_t lo = hi - 1;
        const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
        return CMatrix((1.0 - w) * table->values[lo] + w * table->values[hi]);
      },
      desc.str(), "linear");
}

HamiltonianField HamiltonianField::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("hamiltonian csv: cannot open " + path);
  return from_csv(in);
}

CMatrix HamiltonianField::operator()(double x) const {
  CMatrix H = eval_(x);
  if (H.rows() != dim_ || H.cols() != dim_) {
    throw InputError("hamiltonian: evaluator returned wrong shape");
  }
  if (!H.allFinite()) {
    std::ostringstream msg;
    msg << "hamiltonian: non-finite H at x = " << x;
    throw InputError(msg.str());
  }
  const auto pd = linalg::posdef_check(H, 1e-10);
  if (!pd.is_pd) {
    std::ostringstream msg;
    msg << "hamiltonian: H(" << x << ") not Hermitian positive definite "
        << "(min eigenvalue " << pd.min_eig << ", Hermitian defect "
        << pd.hermitian_defect << ")";
    throw InputError(msg.str());
  }
  return H;
}

}  // namespace gbdt
