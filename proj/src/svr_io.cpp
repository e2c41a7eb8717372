#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "greysvr/error.hpp"
#include "greysvr/svr.hpp"

// Model file layout, one keyword per line:
//
//   greysvr-model 1
//   C <v> / epsilon <v> / gamma <v> / bias <v> / iterations <n> / violation <v>
//   dimension <m>
//   weights none | weights <w_1..w_m>, then degrees <d_1..d_m>
//   features <name_1..name_m> (may be empty)
//   feature_norm <min_1 max_1 ..> / feature_clamp <md_1 mad_1 k_1 ..>
//   target_norm none | target_norm <min> <max>
//   support_vectors <count>, then <count> lines "beta x_1 .. x_m"
//   end

namespace greysvr {

namespace {

constexpr const char* kMagic = "greysvr-model";
constexpr int kVersion = 1;

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream expect(const std::string& key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string k;
      ss >> k;
      if (k != key) fail("expected '" + key + "', found '" + k + "'");
      return ss;
    }
    fail("unexpected end of file, expected '" + key + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError("model file line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

double next_real(std::istringstream& ss, const LineReader& r) {
  std::string tok;
  if (!(ss >> tok)) r.fail("missing value");
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) r.fail("bad number '" + tok + "'");
  return v;
}

std::vector<std::string> rest_tokens(std::istringstream& ss) {
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<double> to_reals(const std::vector<std::string>& toks, const LineReader& r) {
  std::vector<double> out;
  for (const auto& tok : toks) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) r.fail("bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> rest_reals(std::istringstream& ss, const LineReader& r) {
  return to_reals(rest_tokens(ss), r);
}

}  // namespace

void write_model(std::ostream& out, const SvrModel& m) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << kMagic << ' ' << kVersion << '\n';
  out << "C " << m.hyper.C << '\n';
  out << "epsilon " << m.hyper.epsilon << '\n';
  out << "gamma " << m.hyper.gamma << '\n';
  out << "bias " << m.bias << '\n';
  out << "iterations " << m.iterations << '\n';
  out << "violation " << m.violation << '\n';
  out << "dimension " << m.support_vectors.cols() << '\n';
  if (m.feature_weights) {
    out << "weights";
    for (double w : m.feature_weights->weights) out << ' ' << w;
    out << "\ndegrees";
    for (double d : m.feature_weights->degrees) out << ' ' << d;
    out << '\n';
  } else {
    out << "weights none\n";
  }
  out << "features";
  for (const auto& n : m.feature_names) out << ' ' << n;
  out << "\nfeature_norm";
  for (const auto& p : m.feature_norm) out << ' ' << p.min_x << ' ' << p.max_x;
  out << "\nfeature_clamp";
  for (const auto& p : m.feature_clamp) out << ' ' << p.md << ' ' << p.mad << ' ' << p.k;
  out << '\n';
  if (m.target_norm) {
    out << "target_norm " << m.target_norm->min_x << ' ' << m.target_norm->max_x << '\n';
  } else {
    out << "target_norm none\n";
  }
  out << "support_vectors " << m.dual_coeffs.size() << '\n';
  for (Eigen::Index i = 0; i < m.dual_coeffs.size(); ++i) {
    out << m.dual_coeffs(i);
    for (Eigen::Index k = 0; k < m.support_vectors.cols(); ++k) out << ' ' << m.support_vectors(i, k);
    out << '\n';
  }
  out << "end\n";
  out.flags(flags);
  out.precision(prec);
}

SvrModel read_model(std::istream& in) {
  LineReader r(in);
  SvrModel m;
  {
    auto ss = r.expect(kMagic);
    int version = 0;
    if (!(ss >> version) || version != kVersion) r.fail("unsupported model version");
  }
  {
    auto ss = r.expect("C");
    m.hyper.C = next_real(ss, r);
  }
  {
    auto ss = r.expect("epsilon");
    m.hyper.epsilon = next_real(ss, r);
  }
  {
    auto ss = r.expect("gamma");
    m.hyper.gamma = next_real(ss, r);
  }
  try {
    m.hyper.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  {
    auto ss = r.expect("bias");
    m.bias = next_real(ss, r);
  }
  {
    auto ss = r.expect("iterations");
    if (!(ss >> m.iterations)) r.fail("bad iteration count");
  }
  {
    auto ss = r.expect("violation");
    m.violation = next_real(ss, r);
  }
  Eigen::Index dim = 0;
  {
    auto ss = r.expect("dimension");
    if (!(ss >> dim) || dim < 0) r.fail("bad dimension");
  }
  {
    auto ss = r.expect("weights");
    const auto toks = rest_tokens(ss);
    if (toks.empty()) r.fail("missing weights");
    if (!(toks.size() == 1 && toks[0] == "none")) {
      GreyWeights w;
      w.weights = to_reals(toks, r);
      auto ds = r.expect("degrees");
      w.degrees = rest_reals(ds, r);
      if (static_cast<Eigen::Index>(w.weights.size()) != dim || w.degrees.size() != w.weights.size()) {
        r.fail("weight count does not match dimension");
      }
      m.feature_weights = std::move(w);
    }
  }
  {
    auto ss = r.expect("features");
    std::string name;
    while (ss >> name) m.feature_names.push_back(name);
  }
  {
    auto ss = r.expect("feature_norm");
    const auto v = rest_reals(ss, r);
    if (v.size() % 2 != 0) r.fail("feature_norm needs min/max pairs");
    for (std::size_t i = 0; i < v.size(); i += 2) m.feature_norm.push_back({v[i], v[i + 1]});
  }
  {
    auto ss = r.expect("feature_clamp");
    const auto v = rest_reals(ss, r);
    if (v.size() % 3 != 0) r.fail("feature_clamp needs md/mad/k triples");
    for (std::size_t i = 0; i < v.size(); i += 3) m.feature_clamp.push_back({v[i], v[i + 1], v[i + 2]});
  }
  {
    auto ss = r.expect("target_norm");
    const auto toks = rest_tokens(ss);
    if (toks.empty()) r.fail("missing target_norm");
    if (!(toks.size() == 1 && toks[0] == "none")) {
      const auto v = to_reals(toks, r);
      if (v.size() != 2) r.fail("target_norm needs min and max");
      m.target_norm = NormParams{v[0], v[1]};
    }
  }
  Eigen::Index count = 0;
  {
    auto ss = r.expect("support_vectors");
    if (!(ss >> count) || count < 0) r.fail("bad support vector count");
  }
  m.support_vectors.resize(count, dim);
  m.dual_coeffs.resize(count);
  std::string line;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!std::getline(in, line)) r.fail("truncated support vectors");
    std::istringstream ss(line);
    const auto v = rest_reals(ss, r);
    if (static_cast<Eigen::Index>(v.size()) != dim + 1) r.fail("support vector has wrong dimension");
    m.dual_coeffs(i) = v[0];
    for (Eigen::Index k = 0; k < dim; ++k) m.support_vectors(i, k) = v[static_cast<std::size_t>(k) + 1];
  }
  r.expect("end");
  return m;
}

void save_model(const std::filesystem::path& path, const SvrModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_model(out, model);
}

SvrModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_model(in);
}

}  // namespace greysvr
