#include "greysvr/report.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "csv.hpp"
#include "greysvr/error.hpp"
#include "report_schema.hpp"

namespace greysvr {

using nlohmann::json;

const json& report_schema() {
  static const json schema = json::parse(detail::kReportSchemaText);
  return schema;
}

namespace {

bool has_type(const json& v, const std::string& type) {
  if (type == "null") return v.is_null();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
  return false;
}

class SchemaChecker {
 public:
  explicit SchemaChecker(const json& root) : root_(root) {}

  void check(const json& v, const json& s, const std::string& at, std::vector<std::string>& out) const {
    if (s.is_boolean()) {
      if (!s.get<bool>()) out.push_back(at + ": not allowed");
      return;
    }
    if (auto ref = s.find("$ref"); ref != s.end()) {
      check(v, resolve(ref->get<std::string>()), at, out);
      return;
    }
    if (auto t = s.find("type"); t != s.end()) {
      bool ok = false;
      if (t->is_string()) {
        ok = has_type(v, t->get<std::string>());
      } else {
        for (const auto& item : *t) ok = ok || has_type(v, item.get<std::string>());
      }
      if (!ok) {
        out.push_back(at + ": wrong type (" + std::string(v.type_name()) + ")");
        return;
      }
    }
    if (auto c = s.find("const"); c != s.end() && v != *c) out.push_back(at + ": expected " + c->dump());
    if (auto e = s.find("enum"); e != s.end()) {
      if (std::find(e->begin(), e->end(), v) == e->end()) out.push_back(at + ": value " + v.dump() + " not in enum");
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (auto m = s.find("minimum"); m != s.end() && x < m->get<double>()) out.push_back(at + ": below minimum");
      if (auto m = s.find("maximum"); m != s.end() && x > m->get<double>()) out.push_back(at + ": above maximum");
      if (auto m = s.find("exclusiveMinimum"); m != s.end() && x <= m->get<double>()) {
        out.push_back(at + ": not above exclusive minimum");
      }
    }
    if (auto one = s.find("oneOf"); one != s.end()) {
      int matches = 0;
      for (const auto& option : *one) {
        std::vector<std::string> sub;
        check(v, option, at, sub);
        matches += sub.empty() ? 1 : 0;
      }
      if (matches != 1) out.push_back(at + ": matches " + std::to_string(matches) + " oneOf branches");
    }
    if (v.is_object()) {
      if (auto req = s.find("required"); req != s.end()) {
        for (const auto& k : *req) {
          if (!v.contains(k.get<std::string>())) out.push_back(at + ": missing '" + k.get<std::string>() + "'");
        }
      }
      const auto props = s.find("properties");
      const auto extra = s.find("additionalProperties");
      for (const auto& [key, value] : v.items()) {
        const std::string child = at + "/" + key;
        if (props != s.end() && props->contains(key)) {
          check(value, (*props)[key], child, out);
        } else if (extra != s.end()) {
          check(value, *extra, child, out);
        }
      }
    }
    if (v.is_array()) {
      if (auto items = s.find("items"); items != s.end()) {
        for (std::size_t i = 0; i < v.size(); ++i) check(v[i], *items, at + "/" + std::to_string(i), out);
      }
    }
  }

 private:
  const json& resolve(const std::string& ref) const {
    if (ref.rfind("#/", 0) != 0) throw std::invalid_argument("unsupported $ref '" + ref + "'");
    const json* node = &root_;
    std::size_t pos = 2;
    while (pos <= ref.size()) {
      const std::size_t next = std::min(ref.find('/', pos), ref.size());
      node = &node->at(ref.substr(pos, next - pos));
      pos = next + 1;
    }
    return *node;
  }

  const json& root_;
};

json counts_json(const MetricCounts& c) { return {{"mse", c.mse}, {"mae", c.mae}, {"ds", c.ds}, {"scc", c.scc}}; }

json metrics_json(const EvalReport& e) {
  return {{"mse", e.mse}, {"mae", e.mae}, {"ds", e.ds}, {"scc", e.scc ? json(*e.scc) : json(nullptr)}};
}

json model_json(const ModelResult& m) {
  return {{"hyperparameters", {{"C", m.best.C}, {"epsilon", m.best.epsilon}, {"gamma", m.best.gamma}}},
          {"cv_error", m.cv_error},
          {"failed_cells", m.failed_cells},
          {"support_vectors", m.support_vectors},
          {"iterations", m.iterations},
          {"metrics", metrics_json(m.eval)}};
}

json stock_json(const StockResult& s) {
  json j = {{"id", s.id}, {"status", s.skip_reason.empty() ? "ok" : "skipped"}};
  if (!s.skip_reason.empty()) j["skip_reason"] = s.skip_reason;
  if (s.factors.empty()) return j;
  j["factors"] = s.factors;
  j["dropped"] = s.dropped;
  j["rows"] = {{"total", s.rows}, {"weight", s.weight_rows}, {"train", s.train_rows}, {"test", s.test_rows}};
  j["test_out_of_range"] = s.test_out_of_range;
  json grey = json::array();
  for (std::size_t i = 0; i < s.factors.size() && i < s.weights.weights.size(); ++i) {
    grey.push_back({{"factor", s.factors[i]}, {"degree", s.weights.degrees[i]}, {"weight", s.weights.weights[i]}});
  }
  j["grey"] = grey;
  json models = json::object();
  if (s.csvr) models["csvr"] = model_json(*s.csvr);
  if (s.fwsvr) models["fwsvr"] = model_json(*s.fwsvr);
  j["models"] = models;
  return j;
}

std::string fmt(double v) { return detail::format_real(v); }

std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
  return path;
}

}  // namespace

std::vector<std::string> schema_violations(const json& doc, const json& schema) {
  std::vector<std::string> out;
  SchemaChecker(schema).check(doc, schema, "", out);
  return out;
}

json to_json(const ScreeningReport& r) {
  json factors = json::array();
  for (const auto& f : r.factors) {
    json repeats = json::array();
    for (const auto& rr : f.repeats) {
      repeats.push_back({{"stocks", rr.stocks},
                         {"wins", counts_json(rr.wins)},
                         {"scc_pairs", rr.scc_pairs},
                         {"failed", rr.failed},
                         {"error", rr.error}});
    }
    factors.push_back({{"name", f.name},
                       {"mean_degree", f.mean_degree},
                       {"stocks", f.degree_stocks},
                       {"class", f.observed ? "observed" : "basic"},
                       {"verdict", verdict_name(f.verdict)},
                       {"repeats", repeats}});
  }
  return {{"threshold", r.threshold},
          {"fraction", r.options.fraction},
          {"repeats", r.options.repeats},
          {"fail_metrics", r.options.fail_metrics},
          {"fail_repeats", r.options.fail_repeats},
          {"note", r.note},
          {"skipped", r.skipped},
          {"selected", r.selected},
          {"factors", factors}};
}

json to_json(const ComparisonSummary& c) {
  return {{"model", "fwsvr"},
          {"baseline", "csvr"},
          {"n_stocks", c.n_stocks},
          {"scc_pairs", c.scc_pairs},
          {"wins", counts_json(c.wins)},
          {"improvement_pct",
           {{"mse", c.improvement_pct.mse},
            {"mae", c.improvement_pct.mae},
            {"ds", c.improvement_pct.ds},
            {"scc", c.improvement_pct.scc}}}};
}

json to_json(const RunReport& r) {
  json stocks = json::array();
  for (const auto& s : r.stocks) stocks.push_back(stock_json(s));
  json config = json::object();
  for (const auto& [k, v] : describe(r.config)) config[k] = v;
  const std::string eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
  return {{"schema", kReportSchemaId},
          {"versions", {{"greysvr", GREYSVR_VERSION}, {"eigen", eigen}}},
          {"config", config},
          {"metadata",
           {{"improvement_averaging", "all-stocks"},
            {"comparison", "wins count stocks where fwsvr is strictly better than csvr"},
            {"stage_order",
             {"ingest", "indicators", "lag", "align", "split", "clamp", "normalize", "gca-weights", "screening",
              "grid-search", "train", "evaluate"}}}},
          {"factors", r.factors},
          {"screening", r.screening ? to_json(*r.screening) : json(nullptr)},
          {"stocks", stocks},
          {"comparison", r.comparison ? to_json(*r.comparison) : json(nullptr)},
          {"wall_time_seconds", r.wall_time}};
}

std::string report_text(const RunReport& report) {
  const json doc = to_json(report);
  const auto problems = schema_violations(doc, report_schema());
  if (!problems.empty()) throw std::logic_error("report does not match its schema: " + problems.front());
  return doc.dump(2) + "\n";
}

std::string evaluations_tsv(const RunReport& report) {
  std::string out = "id\tmodel\tmse\tmae\tds\tscc\tC\tepsilon\tgamma\n";
  for (const auto& s : report.stocks) {
    for (const auto* m : {&s.csvr, &s.fwsvr}) {
      if (!*m) continue;
      const ModelResult& r = **m;
      out += s.id + "\t" + std::string(model_name(r.kind)) + "\t" + fmt(r.eval.mse) + "\t" + fmt(r.eval.mae) + "\t" +
             fmt(r.eval.ds) + "\t" + (r.eval.scc ? fmt(*r.eval.scc) : "NA") + "\t" + fmt(r.best.C) + "\t" +
             fmt(r.best.epsilon) + "\t" + fmt(r.best.gamma) + "\n";
    }
  }
  return out;
}

std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  return {write_text(out_dir / "report.json", report_text(report)),
          write_text(out_dir / "evaluations.tsv", evaluations_tsv(report))};
}

std::vector<std::filesystem::path> emit_plot_data(const RunReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  for (const auto& s : report.stocks) {
    if (!s.csvr && !s.fwsvr) continue;
    std::string text = "date\tobserved";
    if (s.csvr) text += "\tcsvr";
    if (s.fwsvr) text += "\tfwsvr";
    text += "\n";
    for (std::size_t i = 0; i < s.test_dates.size(); ++i) {
      text += format_date(s.test_dates[i]) + "\t" + fmt(s.observed[i]);
      if (s.csvr) text += "\t" + fmt(s.csvr->predicted[i]);
      if (s.fwsvr) text += "\t" + fmt(s.fwsvr->predicted[i]);
      text += "\n";
    }
    written.push_back(write_text(out_dir / ("series_" + s.id + ".tsv"), text));
  }

  const ComparisonSummary c = report.comparison.value_or(ComparisonSummary{});
  std::string wins = "metric\tfwsvr_wins\tstocks\n";
  wins += "MSE\t" + std::to_string(c.wins.mse) + "\t" + std::to_string(c.n_stocks) + "\n";
  wins += "MAE\t" + std::to_string(c.wins.mae) + "\t" + std::to_string(c.n_stocks) + "\n";
  wins += "DS\t" + std::to_string(c.wins.ds) + "\t" + std::to_string(c.n_stocks) + "\n";
  wins += "SCC\t" + std::to_string(c.wins.scc) + "\t" + std::to_string(c.scc_pairs) + "\n";
  written.push_back(write_text(out_dir / "wins.tsv", wins));

  std::vector<std::string> columns;
  std::set<std::string> seen;
  for (const auto& s : report.stocks) {
    for (const auto& f : s.factors) {
      if (seen.insert(f).second) columns.push_back(f);
    }
  }
  std::string weights = "id";
  for (const auto& f : columns) weights += "\t" + f;
  weights += "\n";
  for (const auto& s : report.stocks) {
    if (s.factors.empty()) continue;
    std::map<std::string, double> w;
    for (std::size_t i = 0; i < s.factors.size(); ++i) w[s.factors[i]] = s.weights.weights[i];
    weights += s.id;
    for (const auto& f : columns) weights += "\t" + fmt(w.count(f) ? w[f] : 0.0);
    weights += "\n";
  }
  written.push_back(write_text(out_dir / "weights.tsv", weights));
  return written;
}

}  // namespace greysvr
