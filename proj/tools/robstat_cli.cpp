// robstat: robust estimators on CSV data.
//
// Exit status: 0 success, 1 data error, 2 usage error.

#include "csv_table.hpp"

#include "robstat/robstat.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace robstat::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string input;
  std::string response;
  double alpha = 0.75;
  Index h = 0;
  Index k = -1;
  Index nstarts = 500;
  std::uint64_t seed = 0;
  double cutoff_prob = 0.975;
  std::string method = "rsimpls";
  Index kmax = 0;
  bool robust = false;
  std::string out = ".";
};

json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

json to_json(const WeightVector& w) {
  json a = json::array();
  for (Index i = 0; i < w.size(); ++i) a.push_back(w[i] ? 1 : 0);
  return a;
}

json one_based(const std::vector<Index>& idx) {
  json a = json::array();
  for (Index i : idx) a.push_back(i + 1);
  return a;
}

json to_json(const LocationScatter& e) {
  return json{{"center", to_json(e.center)},
              {"scatter", to_json(e.scatter)},
              {"det", e.det},
              {"h", e.h},
              {"consistency", e.consistency}};
}

json flag_vocabulary(const DiagnosticTable& t) {
  if (t.kind == "index_distance") return {"regular", "outlier"};
  if (t.kind == "dd_plot") return {"regular", "classical_only", "robust_only", "both"};
  if (t.kind == "pca_map") return {"regular", "good_leverage", "orthogonal_outlier", "bad_leverage"};
  return {"regular", "good_leverage", "vertical_outlier", "bad_leverage"};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << text;
}

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void table(const std::string& name, const DiagnosticTable& t) {
    std::ostringstream csv;
    write_csv(csv, t);
    write_text(dir_ / (name + ".csv"), csv.str());
    json side{{"kind", t.kind},
              {"x_cutoff", t.x_cutoff},
              {"y_cutoff", t.y_cutoff},
              {"cutoff_prob", t.cutoff_prob},
              {"columns", {"index", "x_dist", "y_dist", "flag"}},
              {"flags", flag_vocabulary(t)}};
    write_text(dir_ / (name + ".json"), side.dump(2) + "\n");
    files_.push_back(name + ".csv");
  }

  void result(json r) {
    r["tables"] = files_;
    write_text(dir_ / "result.json", r.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(s);
  while (std::getline(is, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

/// Splits the table into predictors and the --response columns.
struct XY {
  Matrix x, y;
  std::vector<std::string> x_names, y_names;
};

XY split_xy(const CsvTable& t, const RunConfig& cfg, bool single) {
  const auto names = split_names(cfg.response);
  if (names.empty()) throw UsageError("--response is required for " + cfg.command);
  if (single && names.size() != 1) throw UsageError(cfg.command + " takes exactly one response column");
  std::set<Index> ys;
  XY r;
  std::vector<Index> yi, xi;
  for (const auto& n : names) {
    const Index j = t.column(n);
    if (j < 0) throw UsageError("unknown response column '" + n + "'");
    if (!ys.insert(j).second) throw UsageError("response column '" + n + "' given twice");
    yi.push_back(j);
    r.y_names.push_back(n);
  }
  for (Index j = 0; j < static_cast<Index>(t.names.size()); ++j) {
    if (!ys.count(j)) {
      xi.push_back(j);
      r.x_names.push_back(t.names[static_cast<std::size_t>(j)]);
    }
  }
  if (xi.empty()) throw UsageError("no predictor columns left after removing the response");
  r.x = t.values(Eigen::all, xi);
  r.y = t.values(Eigen::all, yi);
  return r;
}

McdConfig mcd_config(const RunConfig& c) {
  McdConfig m;
  m.h = c.h;
  m.alpha = c.alpha;
  m.nstarts = c.nstarts;
  m.seed = c.seed;
  m.cutoff_prob = c.cutoff_prob;
  return m;
}

CalibConfig calib_config(const RunConfig& c) {
  CalibConfig m;
  m.alpha = c.alpha;
  m.nstarts = c.nstarts;
  m.seed = c.seed;
  m.cutoff_prob = c.cutoff_prob;
  return m;
}

Index require_k(const RunConfig& c) {
  if (c.k < 1) throw UsageError("--k is required for " + c.command);
  return c.k;
}

json header(const RunConfig& c, const CsvTable& t) {
  return json{{"schema", 1},
              {"command", c.command},
              {"input", fs::path(c.input).filename().string()},
              {"n", t.values.rows()},
              {"columns", t.names},
              {"alpha", c.alpha},
              {"h_requested", c.h},
              {"nstarts", c.nstarts},
              {"seed", c.seed},
              {"cutoff_prob", c.cutoff_prob}};
}

void run_mcd(const RunConfig& c, const CsvTable& t, Output& out) {
  const Dataset data(t.values, t.names);
  const McdResult r = fast_mcd(data, mcd_config(c));
  json j = header(c, t);
  j["h"] = r.h;
  j["consistency_factor"] = r.raw.consistency;
  j["raw"] = to_json(r.raw);
  j["reweighted"] = to_json(r.reweighted);
  j["raw_objective"] = r.raw_objective;
  j["exact_fit"] = r.exact_fit;
  j["best_subset"] = one_based(r.best_subset.indices());
  j["weights"] = to_json(r.weights);
  j["robust_distances"] = to_json(r.robust_distances);

  const double cut = chi2_cutoff(data.p(), c.cutoff_prob);
  out.table("robust_distances", index_distance_table(r.robust_distances, cut, c.cutoff_prob));
  const auto classical = classical_estimate(data);
  const Vector md = mahalanobis_distances(data.values(), classical.center, classical.scatter);
  j["mahalanobis_distances"] = to_json(md);
  out.table("dd_plot", dd_plot_table(md, r.robust_distances, data.p(), c.cutoff_prob));
  out.result(std::move(j));
}

json lts_fit_json(const LtsFit& f) {
  return json{{"kind", to_string(f.kind)},
              {"slope", to_json(f.slope())},
              {"intercept", f.intercept_value()},
              {"sigma", f.sigma},
              {"objective", f.objective},
              {"exact_fit", f.exact_fit},
              {"weights", to_json(f.weights)},
              {"std_residuals", to_json(f.std_residuals)}};
}

void run_lts(const RunConfig& c, const CsvTable& t, Output& out) {
  const XY d = split_xy(t, c, true);
  LtsConfig lc;
  lc.h = c.h;
  lc.alpha = c.alpha;
  lc.nstarts = c.nstarts;
  lc.seed = c.seed;
  lc.cutoff_prob = c.cutoff_prob;
  const LtsResult r = fast_lts(d.x, Vector(d.y.col(0)), lc);
  json j = header(c, t);
  j["predictors"] = d.x_names;
  j["response"] = d.y_names;
  j["h"] = r.h;
  j["best_subset"] = one_based(r.raw.best_subset.indices());
  j["raw"] = lts_fit_json(r.raw);
  j["reweighted"] = lts_fit_json(r.reweighted);

  McdConfig mc = mcd_config(c);
  mc.h = 0;
  const McdResult mx = fast_mcd(d.x, mc);
  out.table("regression_map", to_table(regression_outlier_map(d.x, Vector(d.y.col(0)), r.reweighted, mx, c.cutoff_prob)));
  out.result(std::move(j));
}

json mvreg_fit_json(const MvRegFit& f) {
  return json{{"kind", to_string(f.kind)},
              {"B", to_json(f.B)},
              {"alpha", to_json(f.alpha)},
              {"sigma_eps", to_json(f.sigma_eps)},
              {"degenerate", f.degenerate},
              {"weights", to_json(f.weights)},
              {"residual_distances", to_json(f.residual_distances)}};
}

void run_mvreg(const RunConfig& c, const CsvTable& t, Output& out) {
  const XY d = split_xy(t, c, false);
  const MvRegResult r = mcd_regression(d.x, d.y, mcd_config(c));
  json j = header(c, t);
  j["predictors"] = d.x_names;
  j["response"] = d.y_names;
  j["h"] = r.joint.h;
  j["joint_degenerate"] = r.joint_degenerate;
  j["raw"] = mvreg_fit_json(r.raw);
  j["reweighted"] = mvreg_fit_json(r.reweighted);

  McdConfig mc = mcd_config(c);
  mc.h = 0;
  const McdResult mx = fast_mcd(d.x, mc);
  out.table("mvreg_map", to_table(mvreg_outlier_map(d.x, d.y, r.reweighted, mx, c.cutoff_prob)));
  out.result(std::move(j));
}

void run_discriminant(const RunConfig& c, const CsvTable& t, Output& out, bool linear) {
  const XY d = split_xy(t, c, true);
  std::vector<int> labels;
  for (Index i = 0; i < d.y.rows(); ++i) {
    const double v = d.y(i, 0);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
      throw Error(Errc::InvalidArgument, "row " + std::to_string(i + 1) + ": group label must be an integer");
    }
    labels.push_back(static_cast<int>(v));
  }
  McdConfig mc = mcd_config(c);
  const GroupModel m = linear ? fit_rlda(d.x, labels, mc) : fit_rqda(d.x, labels, mc);
  json j = header(c, t);
  j["predictors"] = d.x_names;
  j["label"] = d.y_names.front();
  j["mode"] = linear ? "linear" : "quadratic";
  json groups = json::array();
  for (std::size_t g = 0; g < m.groups.size(); ++g) {
    groups.push_back(json{{"id", m.groups[g]},
                          {"n", m.sizes[g]},
                          {"prior", m.priors[g]},
                          {"center", to_json(m.centers[g])},
                          {"scatter", to_json(m.scatters[g])},
                          {"weights", to_json(m.weights[g])}});
  }
  j["groups"] = groups;
  if (m.pooled) j["pooled_scatter"] = to_json(*m.pooled);
  const auto pred = classify(m, d.x);
  Index wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != labels[i];
  j["predicted"] = pred;
  j["training_error"] = static_cast<double>(wrong) / static_cast<double>(pred.size());
  out.result(std::move(j));
}

json pca_json(const PcaModel& m) {
  return json{{"k", m.k},
              {"h", m.h},
              {"center", to_json(m.center)},
              {"loadings", to_json(m.loadings)},
              {"eigenvalues", to_json(m.eigenvalues)},
              {"sd_cutoff", m.sd_cutoff},
              {"od_cutoff", m.od_cutoff},
              {"od_degenerate", m.od_degenerate}};
}

void run_robpca(const RunConfig& c, const CsvTable& t, Output& out) {
  RobpcaConfig rc;
  rc.alpha = c.alpha;
  rc.h = c.h;
  rc.nstarts = c.nstarts;
  rc.seed = c.seed;
  rc.cutoff_prob = c.cutoff_prob;
  const PcaModel m = robpca(t.values, std::max<Index>(c.k, 0), rc);
  json j = header(c, t);
  j["model"] = pca_json(m);
  j["scores"] = to_json(scores(m, t.values));
  out.table("pca_map", to_table(pca_outlier_map(m, t.values)));
  out.result(std::move(j));
}

json pls_json(const PlsModel& m) {
  return json{{"k", m.k},
              {"robust", m.robust},
              {"x_center", to_json(m.x_center)},
              {"y_center", to_json(m.y_center)},
              {"weights_r", to_json(m.weights_r)},
              {"y_weights_q", to_json(m.y_weights_q)},
              {"x_loadings", to_json(m.x_loadings)},
              {"coefficients", to_json(m.coefficients)},
              {"intercept", to_json(m.intercept)},
              {"weights", to_json(m.row_weights)}};
}

void run_pls(const RunConfig& c, const CsvTable& t, Output& out, bool robust) {
  const XY d = split_xy(t, c, false);
  const Index k = require_k(c);
  const PlsModel m = robust ? rsimpls(d.x, d.y, k, calib_config(c)) : simpls(d.x, d.y, k);
  json j = header(c, t);
  j["predictors"] = d.x_names;
  j["response"] = d.y_names;
  j["model"] = pls_json(m);
  out.table("regression_map", to_table(pls_outlier_map(m, d.x, d.y)));
  out.result(std::move(j));
}

void run_rpcr(const RunConfig& c, const CsvTable& t, Output& out) {
  const XY d = split_xy(t, c, false);
  const PcrModel m = rpcr(d.x, d.y, require_k(c), calib_config(c));
  json j = header(c, t);
  j["predictors"] = d.x_names;
  j["response"] = d.y_names;
  j["pca"] = pca_json(m.pca);
  j["regression"] = mvreg_fit_json(m.regression.reweighted);
  j["coefficients"] = to_json(m.coefficients);
  j["intercept"] = to_json(m.intercept);
  out.table("mvreg_map", to_table(make_outlier_map(MapKind::MvRegression, score_distances(m.pca, d.x),
                                                   m.regression.reweighted.residual_distances, m.pca.sd_cutoff,
                                                   chi2_cutoff(d.y.cols(), c.cutoff_prob), c.cutoff_prob)));
  out.table("pca_map", to_table(pca_outlier_map(m.pca, d.x)));
  out.result(std::move(j));
}

void run_rmsecv(const RunConfig& c, const CsvTable& t, Output& out) {
  const XY d = split_xy(t, c, false);
  if (c.kmax < 1) throw UsageError("--kmax is required for rmsecv");
  CalibMethod method;
  if (c.method == "simpls") method = CalibMethod::Simpls;
  else if (c.method == "rsimpls") method = CalibMethod::Rsimpls;
  else if (c.method == "rpcr") method = CalibMethod::Rpcr;
  else throw UsageError("--method must be simpls, rsimpls or rpcr");
  const CvCurve cv = rmsecv(d.x, d.y, c.kmax, method, c.robust, calib_config(c));
  json j = header(c, t);
  j["predictors"] = d.x_names;
  j["response"] = d.y_names;
  j["method"] = to_string(method);
  j["robust"] = c.robust;
  j["k_values"] = cv.k_values;
  j["rmsecv"] = cv.rmsecv;
  j["selected_k"] = cv.selected_k;
  out.result(std::move(j));
}

void run(const RunConfig& c) {
  const CsvTable t = read_csv_file(c.input);
  Output out(c.out);
  if (c.command == "mcd") run_mcd(c, t, out);
  else if (c.command == "lts") run_lts(c, t, out);
  else if (c.command == "mvreg") run_mvreg(c, t, out);
  else if (c.command == "qda") run_discriminant(c, t, out, false);
  else if (c.command == "lda") run_discriminant(c, t, out, true);
  else if (c.command == "robpca") run_robpca(c, t, out);
  else if (c.command == "rpcr") run_rpcr(c, t, out);
  else if (c.command == "simpls") run_pls(c, t, out, false);
  else if (c.command == "rsimpls") run_pls(c, t, out, true);
  else if (c.command == "rmsecv") run_rmsecv(c, t, out);
}

}  // namespace
}  // namespace robstat::cli

int main(int argc, char** argv) {
  using namespace robstat::cli;
  RunConfig cfg;
  CLI::App app{"Robust multivariate estimators on CSV data"};
  app.require_subcommand(1, 1);
  app.set_help_flag("--help", "print help and exit");  // -h would clash with --h

  const std::vector<std::pair<std::string, std::string>> commands{
      {"mcd", "minimum covariance determinant location and scatter"},
      {"lts", "least trimmed squares regression"},
      {"mvreg", "MCD multivariate regression"},
      {"qda", "robust quadratic discriminant analysis"},
      {"lda", "robust linear discriminant analysis"},
      {"robpca", "robust principal components"},
      {"rpcr", "robust principal component regression"},
      {"simpls", "partial least squares (SIMPLS)"},
      {"rsimpls", "robust partial least squares"},
      {"rmsecv", "leave-one-out RMSECV curve"}};
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("input", cfg.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    sub->add_option("--alpha", cfg.alpha, "subset fraction")->capture_default_str()->check(CLI::Range(0.5, 1.0));
    sub->add_option("--h", cfg.h, "subset size (overrides --alpha)")->check(CLI::NonNegativeNumber);
    sub->add_option("--k", cfg.k, "number of components");
    sub->add_option("--nstarts", cfg.nstarts, "random starts")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--cutoff-prob", cfg.cutoff_prob, "chi-square cutoff probability")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--response", cfg.response, "response column names, comma separated");
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    if (name == "rmsecv") {
      sub->add_option("--method", cfg.method, "simpls, rsimpls or rpcr")->capture_default_str();
      sub->add_option("--kmax", cfg.kmax, "largest number of components");
      sub->add_flag("--robust", cfg.robust, "robust RMSECV");
    }
    sub->callback([&cfg, n = name] { cfg.command = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    run(cfg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const CsvError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 1;
  } catch (const robstat::Error& e) {
    std::cerr << "data error [" << robstat::errc_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
