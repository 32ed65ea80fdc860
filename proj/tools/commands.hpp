#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fks/fks.hpp"

namespace fks::cli {

using json = nlohmann::json;

// ---- shared helpers ----

inline std::string output_path(const json& cfg, const std::string& file) {
  const std::filesystem::path dir = cfg.at("out").get<std::string>();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cli", "cannot create '" + dir.string() + "': " + ec.message());
  return (dir / file).string();
}

inline std::vector<std::string> provenance(const std::string& command, const json& cfg) {
  return {"fks " + command, "config: " + cfg.dump(), "seed: " + std::to_string(cfg.at("seed").get<long long>())};
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cli", "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "-8:4" (inclusive range) or "-8,-6,-4" (explicit list)
inline LambdaGrid parse_exponents(const std::string& s) {
  std::vector<int> e;
  auto as_int = [&](const std::string& x) {
    const auto v = detail::parse_double(detail::trim(x));
    if (!v || *v != static_cast<int>(*v)) {
      throw Error(ErrorKind::InvalidConfig, "cli", "bad lambda exponent '" + x + "'");
    }
    return static_cast<int>(*v);
  };
  const auto colon = s.find(':', 1);
  if (colon != std::string::npos) {
    const int lo = as_int(s.substr(0, colon));
    const int hi = as_int(s.substr(colon + 1));
    if (lo > hi) throw Error(ErrorKind::InvalidConfig, "cli", "empty exponent range '" + s + "'");
    for (int l = lo; l <= hi; ++l) e.push_back(l);
  } else {
    for (const auto& x : split_list(s)) e.push_back(as_int(x));
  }
  return LambdaGrid::from_exponents(e);
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json fit_defaults() {
  return {{"data", ""},        {"variant", "fs2"}, {"lambda1", kDefaultLambda1}, {"lambda2", kDefaultLambda2},
          {"nbasis", 12},      {"order", 4},       {"knots", "free"},            {"grid_size", 50},
          {"threads", 1}};
}

struct FitOutcome {
  FitModel model;
  std::vector<double> knots;
};

inline FitOutcome fit_from_config(const FunctionalDataset& data, const json& cfg) {
  const Variant v = parse_variant(cfg.at("variant").get<std::string>());
  const PenaltyConfig penalty = variant_config(v, cfg.at("lambda1").get<double>(), cfg.at("lambda2").get<double>());
  const int nb = cfg.at("nbasis").get<int>();
  const int order = cfg.at("order").get<int>();
  const std::string mode = cfg.at("knots").get<std::string>();
  if (nb <= order) throw Error(ErrorKind::InvalidConfig, "cli", "nbasis must exceed order");
  FitOutcome out;
  if (mode == "fixed") {
    const int p = nb - order;
    for (int i = 1; i <= p; ++i) out.knots.push_back(data.lo + (data.hi - data.lo) * i / (p + 1));
    out.model = fit_coefficients(data, make_basis_spec(data.lo, data.hi, order, out.knots), penalty);
  } else if (mode == "free") {
    KnotSearchConfig search = fixed_basis_search(nb, order);
    search.grid_size = cfg.at("grid_size").get<int>();
    search.threads = cfg.at("threads").get<int>();
    auto fk = add_knots_gradually(data, penalty, search);
    out.knots = fk.knots;
    out.model = std::move(fk.model);
  } else {
    throw Error(ErrorKind::InvalidConfig, "cli", "knots must be 'free' or 'fixed', got '" + mode + "'");
  }
  return out;
}

inline std::vector<int> labels_from_file(const std::string& path, Eigen::Index n) {
  auto labels = read_labels(path);
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error(ErrorKind::LengthMismatch, "cli", "label count does not match the number of curves");
  }
  return labels;
}

// ---- simulate ----

inline json simulate_defaults() {
  return {{"curves_per_group", 50}, {"points", 50}, {"noise_sd", 0.1}, {"heteroscedastic", false},
          {"lo", 0.0},              {"hi", 5.0}};
}

inline int run_simulate(const json& cfg) {
  ScenarioConfig sc;
  sc.curves_per_group = cfg.at("curves_per_group").get<int>();
  sc.points = cfg.at("points").get<int>();
  sc.noise_sd = cfg.at("noise_sd").get<double>();
  sc.heteroscedastic = cfg.at("heteroscedastic").get<bool>();
  sc.lo = cfg.at("lo").get<double>();
  sc.hi = cfg.at("hi").get<double>();
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  const auto s = generate_scenario(sc);
  const auto header = provenance("simulate", cfg);
  write_dataset(output_path(cfg, "dataset.csv"), s.data, header);
  write_labels(output_path(cfg, "labels.csv"), s.labels, header);
  FunctionalDataset means = s.data;
  means.y = s.truth(s.data.t);
  write_dataset(output_path(cfg, "means.csv"), means, header);
  return 0;
}

// ---- fit ----

inline json fit_command_defaults() {
  json d = fit_defaults();
  d["truth_labels"] = "";
  d["tail_lo"] = 0.1;
  d["tail_hi"] = 0.1;
  d["dense_points"] = 201;
  return d;
}

inline int run_fit(const json& cfg) {
  const auto data = read_dataset(cfg.at("data").get<std::string>());
  const auto fit = fit_from_config(data, cfg);
  const auto& m = fit.model;
  const auto tails = make_tails(data.lo, data.hi, cfg.at("tail_lo").get<double>(), cfg.at("tail_hi").get<double>());

  json diag;
  diag["df"] = m.diagnostics.df;
  diag["gcv"] = number_or_null(m.diagnostics.gcv);
  diag["sse"] = m.diagnostics.sse;
  diag["sigma2"] = number_or_null(m.diagnostics.sigma2);
  diag["lambda1"] = m.config.lambda1;
  diag["lambda2"] = m.config.lambda2;
  diag["knots"] = fit.knots;
  diag["n_basis"] = m.spec.n_basis();
  diag["seed"] = cfg.at("seed");
  diag["variant"] = cfg.at("variant");
  const auto fitted_at_data = m.evaluate(data.t);
  const auto discrete = discrete_sse(data.t, data.y, fitted_at_data, tails);
  diag["discrete_sse"] = {{"sse", discrete.sse}, {"sse_inf", discrete.sse_inf}, {"sse_sup", discrete.sse_sup}};
  const std::string truth_path = cfg.at("truth_labels").get<std::string>();
  if (!truth_path.empty()) {
    const auto labels = labels_from_file(truth_path, data.n_curves());
    const auto truth = function_family([labels](int j, double x) { return mean_function(labels[j], x); },
                                       data.n_curves());
    const auto fitted = spline_family(m);
    const auto local = local_isse(truth, fitted, tails, kDefaultQuadPanels, fit.knots);
    diag["isse"] = integrated_sse(truth, fitted, data.lo, data.hi, kDefaultQuadPanels, fit.knots);
    diag["isse_inf"] = local.isse_inf;
    diag["isse_sup"] = local.isse_sup;
  } else {
    diag["isse"] = nullptr;
    diag["isse_inf"] = nullptr;
    diag["isse_sup"] = nullptr;
  }
  diag["config"] = cfg;
  write_json(output_path(cfg, "diagnostics.json"), diag);

  const auto header = provenance("fit", cfg);
  std::vector<std::string> cols{"basis"};
  for (Eigen::Index j = 0; j < m.coeffs.cols(); ++j) cols.push_back("curve_" + std::to_string(j + 1));
  Eigen::MatrixXd table(m.coeffs.rows(), m.coeffs.cols() + 1);
  for (Eigen::Index i = 0; i < m.coeffs.rows(); ++i) table(i, 0) = static_cast<double>(i + 1);
  table.rightCols(m.coeffs.cols()) = m.coeffs;
  write_table(output_path(cfg, "coefficients.csv"), cols, table, header);

  const int dense = cfg.at("dense_points").get<int>();
  if (dense < 2) throw Error(ErrorKind::InvalidConfig, "cli", "dense_points must be >= 2");
  FunctionalDataset curves;
  curves.lo = data.lo;
  curves.hi = data.hi;
  for (int i = 0; i < dense; ++i) curves.t.push_back(data.lo + (data.hi - data.lo) * i / (dense - 1));
  curves.t.back() = data.hi;
  curves.y = m.evaluate(curves.t);
  write_dataset(output_path(cfg, "curves.csv"), curves, header);
  return 0;
}

// ---- gcv ----

inline json gcv_defaults() {
  json d = fit_defaults();
  d.erase("variant");
  d.erase("lambda1");
  d.erase("lambda2");
  d["knots"] = "fixed";
  d["exponents"] = "-8:4";
  d["search"] = "grid";
  return d;
}

inline int run_gcv(const json& cfg) {
  const auto data = read_dataset(cfg.at("data").get<std::string>());
  const auto grid = parse_exponents(cfg.at("exponents").get<std::string>());
  const int nb = cfg.at("nbasis").get<int>();
  const int order = cfg.at("order").get<int>();
  if (nb <= order) throw Error(ErrorKind::InvalidConfig, "cli", "nbasis must exceed order");
  GridTarget target;
  target.search = fixed_basis_search(nb, order);
  target.search.grid_size = cfg.at("grid_size").get<int>();
  const std::string mode = cfg.at("knots").get<std::string>();
  if (mode == "fixed") {
    const int p = nb - order;
    std::vector<double> knots;
    for (int i = 1; i <= p; ++i) knots.push_back(data.lo + (data.hi - data.lo) * i / (p + 1));
    target.mode = KnotMode::Fixed;
    target.spec = make_basis_spec(data.lo, data.hi, order, knots);
  } else if (mode == "free") {
    target.mode = KnotMode::Free;
  } else {
    throw Error(ErrorKind::InvalidConfig, "cli", "knots must be 'free' or 'fixed', got '" + mode + "'");
  }
  const int threads = cfg.at("threads").get<int>();
  const std::string search = cfg.at("search").get<std::string>();
  GridSearchResult res;
  if (search == "grid") {
    res = gcv_grid_search(data, target, grid, threads);
  } else if (search == "line") {
    res = gcv_line_search(data, target, grid, 0.0, threads);
  } else {
    throw Error(ErrorKind::InvalidConfig, "cli", "search must be 'grid' or 'line', got '" + search + "'");
  }

  Eigen::MatrixXd table(res.scores.size(), 3);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < res.lambda1_values.size(); ++i) {
    for (std::size_t j = 0; j < res.lambda2_values.size(); ++j, ++row) {
      table(row, 0) = res.lambda1_values[i];
      table(row, 1) = res.lambda2_values[j];
      table(row, 2) = res.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  const std::vector<std::string> cols{"lambda1", "lambda2", "gcv"};
  write_table(output_path(cfg, "gcv_scores.csv"), cols, table, provenance("gcv", cfg));

  json sel;
  sel["lambda1"] = res.lambda1;
  sel["lambda2"] = res.lambda2;
  sel["gcv"] = res.best_gcv;
  sel["failures"] = res.failures;
  sel["reference_cell"] = {{"lambda1", kDefaultLambda1}, {"lambda2", kDefaultLambda2}};
  sel["matches_reference"] = res.lambda1 == kDefaultLambda1 && res.lambda2 == kDefaultLambda2;
  sel["seed"] = cfg.at("seed");
  sel["config"] = cfg;
  write_json(output_path(cfg, "gcv_selection.json"), sel);
  return 0;
}

// ---- cluster ----

inline json cluster_defaults() {
  json d = fit_defaults();
  d["method"] = "kmeans";
  d["linkage"] = "ward";
  d["k"] = 4;
  d["kmax"] = 8;
  d["restarts"] = 20;
  d["labels"] = "";
  return d;
}

inline int run_cluster(const json& cfg) {
  const auto data = read_dataset(cfg.at("data").get<std::string>());
  const auto fit = fit_from_config(data, cfg);
  const int k = cfg.at("k").get<int>();
  const int k_max = cfg.at("kmax").get<int>();
  const int restarts = cfg.at("restarts").get<int>();
  const int threads = cfg.at("threads").get<int>();
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const std::string method = cfg.at("method").get<std::string>();
  const Eigen::MatrixXd z = gram_features(fit.model);

  ClusterResult res;
  if (method == "kmeans") {
    res = kmeans_features(z, k, seed, restarts, threads, &fit.model.coeffs);
  } else if (method == "hierarchical") {
    res = hierarchical_features(z, k, parse_linkage(cfg.at("linkage").get<std::string>()), &fit.model.coeffs);
  } else {
    throw Error(ErrorKind::InvalidConfig, "cli", "method must be 'kmeans' or 'hierarchical', got '" + method + "'");
  }
  const auto header = provenance("cluster", cfg);
  write_labels(output_path(cfg, "partition.csv"), res.partition.labels, header);

  json metrics;
  metrics["method"] = method;
  metrics["k"] = k;
  metrics["within"] = res.within;
  metrics["iterations"] = res.iterations;
  metrics["knots"] = fit.knots;
  metrics["seed"] = cfg.at("seed");
  if (k_max >= 2) {
    const auto elbow = elbow_features(z, k_max, seed, restarts, threads);
    Eigen::MatrixXd table(static_cast<Eigen::Index>(elbow.within.size()), 2);
    for (std::size_t i = 0; i < elbow.within.size(); ++i) {
      table(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i + 1);
      table(static_cast<Eigen::Index>(i), 1) = elbow.within[i];
    }
    const std::vector<std::string> cols{"k", "within"};
    write_table(output_path(cfg, "elbow.csv"), cols, table, header);
    metrics["elbow"] = {{"suggested_k", elbow.suggested_k},
                        {"max_curvature", elbow.max_curvature},
                        {"low_confidence", elbow.low_confidence}};
  }
  const std::string label_path = cfg.at("labels").get<std::string>();
  if (!label_path.empty()) {
    const auto truth = labels_from_file(label_path, data.n_curves());
    const auto& pred = res.partition.labels;
    const auto cc = confusion_counts(pred, truth);
    const auto ari = adjusted_rand_index_detail(pred, truth);
    metrics["rand_index"] = rand_index(pred, truth);
    metrics["adjusted_rand_index"] = ari.value;
    metrics["ari_degenerate"] = ari.degenerate;
    metrics["confusion"] = {{"tp", cc.tp}, {"tn", cc.tn}, {"fp", cc.fp}, {"fn", cc.fn}};
    json matches = json::array();
    for (const auto& m : match_clusters(pred, truth)) {
      matches.push_back({{"cluster", m.label},
                         {"group", m.truth_label},
                         {"size", m.size},
                         {"false_positives", m.false_positives}});
    }
    metrics["matches"] = matches;
  }
  metrics["config"] = cfg;
  write_json(output_path(cfg, "metrics.json"), metrics);
  return 0;
}

// ---- replicate ----

inline json replicate_defaults() {
  json d = simulate_defaults();
  d["replications"] = 30;
  d["variants"] = "fs0,fs1,fs2";
  d["methods"] = "kmeans,hierarchical";
  d["lambda1"] = kDefaultLambda1;
  d["lambda2"] = kDefaultLambda2;
  d["nbasis"] = 12;
  d["order"] = 4;
  d["grid_size"] = 50;
  d["linkage"] = "ward";
  d["k"] = 4;
  d["kmax"] = 8;
  d["restarts"] = 20;
  d["tail_lo"] = 0.1;
  d["tail_hi"] = 0.1;
  d["threads"] = 1;
  return d;
}

inline StudyConfig study_from_config(const json& cfg) {
  StudyConfig st;
  st.scenario.curves_per_group = cfg.at("curves_per_group").get<int>();
  st.scenario.points = cfg.at("points").get<int>();
  st.scenario.noise_sd = cfg.at("noise_sd").get<double>();
  st.scenario.heteroscedastic = cfg.at("heteroscedastic").get<bool>();
  st.scenario.lo = cfg.at("lo").get<double>();
  st.scenario.hi = cfg.at("hi").get<double>();
  st.n_basis = cfg.at("nbasis").get<int>();
  st.order = cfg.at("order").get<int>();
  st.lambda1 = cfg.at("lambda1").get<double>();
  st.lambda2 = cfg.at("lambda2").get<double>();
  st.grid_size = cfg.at("grid_size").get<int>();
  st.linkage = parse_linkage(cfg.at("linkage").get<std::string>());
  st.k = cfg.at("k").get<int>();
  st.k_max = cfg.at("kmax").get<int>();
  st.restarts = cfg.at("restarts").get<int>();
  st.tail_lo = cfg.at("tail_lo").get<double>();
  st.tail_hi = cfg.at("tail_hi").get<double>();
  st.variants.clear();
  for (const auto& v : split_list(cfg.at("variants").get<std::string>())) st.variants.push_back(parse_variant(v));
  st.kmeans = st.hierarchical = false;
  for (const auto& m : split_list(cfg.at("methods").get<std::string>())) {
    if (m == "kmeans") {
      st.kmeans = true;
    } else if (m == "hierarchical") {
      st.hierarchical = true;
    } else {
      throw Error(ErrorKind::InvalidConfig, "cli", "unknown clustering method '" + m + "'");
    }
  }
  return st;
}

inline int run_replicate(const json& cfg) {
  const StudyConfig st = study_from_config(cfg);
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const auto results = run_study(st, seed, cfg.at("replications").get<int>(), cfg.at("threads").get<int>());
  const auto summary = summarize(st, results);
  const auto header = provenance("replicate", cfg);

  {
    std::ofstream out(output_path(cfg, "replicate_runs.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cli", "cannot write replicate_runs.csv");
    for (const auto& h : header) out << "# " << h << '\n';
    out << "seed,variant,df,gcv,sse,isse,isse_inf,isse_sup,ari_kmeans,ari_hierarchical,elbow_k\n";
    for (const auto& r : results) {
      for (const auto& o : r.variants) {
        out << r.seed << ',' << to_string(o.variant) << ',' << detail::format_double(o.diagnostics.df) << ','
            << detail::format_double(o.diagnostics.gcv) << ',' << detail::format_double(o.diagnostics.sse) << ','
            << detail::format_double(o.isse) << ',' << detail::format_double(o.isse_inf) << ','
            << detail::format_double(o.isse_sup) << ',' << detail::format_double(o.ari_kmeans) << ','
            << detail::format_double(o.ari_hierarchical) << ',' << o.elbow_k << '\n';
      }
    }
  }
  {
    std::ofstream out(output_path(cfg, "replicate_summary.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cli", "cannot write replicate_summary.csv");
    for (const auto& h : header) out << "# " << h << '\n';
    out << "variant,replications,median_isse,median_isse_inf,median_isse_sup,mean_df,mean_gcv,"
           "mean_ari_kmeans,mean_ari_hierarchical,elbow_hit_rate\n";
    for (const auto& s : summary) {
      out << to_string(s.variant) << ',' << s.replications << ',' << detail::format_double(s.median_isse) << ','
          << detail::format_double(s.median_isse_inf) << ',' << detail::format_double(s.median_isse_sup) << ','
          << detail::format_double(s.mean_df) << ',' << detail::format_double(s.mean_gcv) << ','
          << (st.kmeans ? detail::format_double(s.mean_ari_kmeans) : "") << ','
          << (st.hierarchical ? detail::format_double(s.mean_ari_hierarchical) : "") << ','
          << (st.k_max >= 2 ? detail::format_double(s.elbow_hit_rate) : "") << '\n';
    }
  }
  json j;
  j["seed"] = cfg.at("seed");
  j["replications"] = results.size();
  for (const auto& s : summary) {
    json v;
    v["median_isse"] = s.median_isse;
    v["median_isse_inf"] = s.median_isse_inf;
    v["median_isse_sup"] = s.median_isse_sup;
    v["mean_df"] = s.mean_df;
    v["mean_gcv"] = number_or_null(s.mean_gcv);
    if (st.kmeans) v["mean_ari_kmeans"] = s.mean_ari_kmeans;
    if (st.hierarchical) v["mean_ari_hierarchical"] = s.mean_ari_hierarchical;
    if (st.k_max >= 2) v["elbow_hit_rate"] = s.elbow_hit_rate;
    j["variants"][std::string(to_string(s.variant))] = v;
  }
  j["config"] = cfg;
  write_json(output_path(cfg, "replicate_summary.json"), j);
  return 0;
}

// ---- ingest ----

inline json ingest_defaults() {
  return {{"input", ""}, {"layout", "wide"}, {"from", ""}, {"to", ""}, {"max_missing", 0.1},
          {"exclude_zero_variance", false}};
}

inline int run_ingest(const json& cfg) {
  auto table = load_csv(cfg.at("input").get<std::string>(), parse_layout(cfg.at("layout").get<std::string>()));
  table = restrict_window(table, cfg.at("from").get<std::string>(), cfg.at("to").get<std::string>());
  StandardizeOptions opts;
  opts.max_missing_fraction = cfg.at("max_missing").get<double>();
  opts.exclude_zero_variance = cfg.at("exclude_zero_variance").get<bool>();
  if (!(opts.max_missing_fraction >= 0.0 && opts.max_missing_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "cli", "max_missing must lie in [0, 1)");
  }
  const auto standardized = standardize(table, opts);
  const auto data = to_dataset(standardized);
  const auto header = provenance("ingest", cfg);
  write_dataset(output_path(cfg, "dataset.csv"), data, header);
  {
    std::ofstream out(output_path(cfg, "series.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cli", "cannot write series.csv");
    for (const auto& h : header) out << "# " << h << '\n';
    out << "curve_id,series\n";
    for (int i = 0; i < standardized.n_series(); ++i) out << "curve_" << (i + 1) << ',' << standardized.series[i] << '\n';
  }
  json j;
  j["series"] = standardized.series;
  j["times"] = {{"first", standardized.times.front()}, {"last", standardized.times.back()},
                {"count", standardized.n_times()}};
  j["notes"] = standardized.notes;
  j["warnings"] = standardized.warnings;
  j["seed"] = cfg.at("seed");
  j["config"] = cfg;
  write_json(output_path(cfg, "ingest.json"), j);
  return 0;
}

}  // namespace fks::cli
