#include "motifcnn/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "motifcnn/analysis.hpp"
#include "motifcnn/ansatz.hpp"
#include "motifcnn/error.hpp"
#include "motifcnn/exact.hpp"
#include "motifcnn/io.hpp"
#include "motifcnn/motif.hpp"
#include "motifcnn/spinchain.hpp"
#include "motifcnn/vmc.hpp"

namespace motifcnn {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

struct BasisArgs {
  int n = 8;
  int m = 2;
};

struct RankArgs {
  int n = 12;
  int m = 2;
  int kmin = 1;
  int kmax = 0;
  int export_k = 0;
};

struct ExactArgs {
  int n = 8;
  int m = 2;
  int k = 4;
  int kmax = 0;
  bool gauge = true;
  double fraction = 0.99;
  double threshold = 0.99;
};

struct CftArgs {
  int k = 4;
  double beta = 0.0;
  int reference_n = 16;
};

struct TrainArgs {
  int n = 16;
  int m = 2;
  int k = 4;
  std::string algorithm = "symforce-traj";
  double eta = 0.01;
  int n_opt = 10;
  int max_iter = 500;
  int samples = 1000;
  int seeds = 1;
  int jobs = 1;
  bool adjacent = false;
  int checkpoint_every = 0;
};

struct RegressArgs {
  std::string input;
  std::string target;
  std::vector<std::string> features;
  std::vector<std::string> interactions;
  std::string outlier_column;
  double cutoff = 6.0;
  std::string mev;
};

std::string fmt(double x) { return format_double(x); }

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// Options explicitly given on the command line win; config keys fill the rest.
void apply_config(CLI::App& sub, const Json& doc) {
  const Json& cfg = (doc.is_object() && doc.contains("config") && doc.contains("subcommand")) ? doc.at("config") : doc;
  if (!cfg.is_object()) throw InvalidArgument("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config" || key == "out") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw InvalidArgument("unknown config key '" + key + "' for " + sub.get_name());
    if (opt->count() > 0) continue;
    auto as_text = [](const Json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    opt->clear();
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(as_text(v));
    } else {
      opt->add_result(as_text(value));
    }
    opt->run_callback();
  }
}

// Every option's resolved value, as text, for the config echo.
Json resolved_config(const CLI::App& sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "out") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1) cfg[name] = res;
      else if (!res.empty()) cfg[name] = res.back();
      else cfg[name] = "true";
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

fs::path output_dir(const Common& common, const std::string& sub) {
  if (!common.out.empty()) return common.out;
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root && *root ? root : ".") / ("motifcnn-" + sub);
}

std::string echo_config(const fs::path& dir, const std::string& sub, const Json& cfg) {
  const std::string hash = content_hash(cfg);
  write_json_atomic(dir / "config.json", Json{{"subcommand", sub}, {"config", cfg}, {"hash", hash}});
  return hash;
}

void cmd_basis(const BasisArgs& a, const fs::path& dir, const std::string& hash, std::ostream& out) {
  const Basis basis(a.n, a.m);
  const auto part = partition_classes(basis);
  CsvTable states{{"index", "state", "class"}, {}};
  for (std::size_t i = 0; i < basis.size(); ++i)
    states.rows.push_back({std::to_string(i), labels_to_string(basis.state(i)), std::to_string(part.class_of[i])});
  write_csv_atomic(dir / "basis.csv", states);
  CsvTable classes{{"class", "representative", "size"}, {}};
  for (std::size_t c = 0; c < part.size(); ++c)
    classes.rows.push_back({std::to_string(c), labels_to_string(basis.state(part.representative[c])),
                            std::to_string(part.members[c].size())});
  write_csv_atomic(dir / "classes.csv", classes);
  const mpq_class bound = class_count_lower_bound(a.n, a.m);
  const Json report{{"N", a.n},
                    {"M", a.m},
                    {"basis_size", basis.size()},
                    {"class_count", part.size()},
                    {"group_order", part.group_order},
                    {"lower_bound", bound.get_str()},
                    {"lower_bound_value", bound.get_d()},
                    {"bound_holds", mpq_class(static_cast<unsigned long>(part.size())) >= bound},
                    {"config_hash", hash}};
  write_json_atomic(dir / "report.json", report);
  out << report.dump() << "\n";
}

void cmd_motif_rank(const RankArgs& a, const fs::path& dir, const std::string& hash, std::ostream& out) {
  const Basis basis(a.n, a.m);
  const auto part = partition_classes(basis);
  const int kmax = a.kmax > 0 ? std::min(a.kmax, a.n) : a.n;
  if (a.kmin < 1 || a.kmin > kmax) throw InvalidArgument("kernel range must satisfy 1 <= kmin <= kmax <= N");
  Json rows = Json::array();
  Json critical = nullptr;
  for (int k = 1; k <= kmax; ++k) {
    const auto mat = motif_count_matrix(basis, k);
    const std::size_t r = integer_rank(mat);
    if (k >= a.kmin) rows.push_back({{"K", k}, {"rank", r}, {"class_count", part.size()}});
    if (critical.is_null() && r >= part.size()) critical = k;
    if (a.kmax == 0 && !critical.is_null()) break;
    if (k == a.export_k) {
      CsvTable t;
      t.header.push_back("motif");
      for (std::size_t c = 0; c < basis.size(); ++c) t.header.push_back(labels_to_string(basis.state(c)));
      for (std::size_t m = 0; m < mat.rows(); ++m) {
        std::vector<std::string> row{motif_string(m, a.m, k)};
        for (std::size_t c = 0; c < mat.cols(); ++c) row.push_back(std::to_string(mat(m, c)));
        t.rows.push_back(std::move(row));
      }
      write_csv_atomic(dir / ("count_matrix_K" + std::to_string(k) + ".csv"), t);
    }
  }
  const Json report{{"N", a.n}, {"M", a.m}, {"class_count", part.size()}, {"critical_kernel", critical},
                    {"ranks", rows}, {"config_hash", hash}};
  write_json_atomic(dir / "rank.json", report);
  out << report.dump() << "\n";
}

CsvTable mev_csv(const MevTable& mev) {
  const auto classes = mev_class_ordering(mev.probability, mev.kernel, mev.species);
  CsvTable t{{"motif", "probability", "count", "class"}, {}};
  for (std::size_t m = 0; m < mev.probability.size(); ++m)
    t.rows.push_back({motif_string(m, mev.species, mev.kernel), fmt(mev.probability[m]), fmt(mev.count[m]),
                      std::to_string(classes.class_of[m])});
  return t;
}

void cmd_exact(const ExactArgs& a, const fs::path& dir, const std::string& hash, std::ostream& out) {
  if (a.k < 1 || a.k > a.n) throw InvalidArgument("K must satisfy 1 <= K <= N");
  const auto gs = ground_state(a.n, a.m, a.gauge && a.m == 2);
  const auto mev = exact_mev(gs, a.k);
  write_csv_atomic(dir / "mev.csv", mev_csv(mev));

  const auto rdm = reduced_density_matrix(gs, a.k);
  const auto spectrum = entanglement_spectrum(rdm);
  write_json_atomic(dir / "spectrum.json", Json{{"N", a.n}, {"M", a.m}, {"K", a.k}, {"spectrum", spectrum}});

  const int kmax = a.kmax > 0 ? std::min(a.kmax, a.n) : std::min(8, a.n - 1);
  CsvTable trunc{{"K", "truncation", "dimension", "ratio", "trace"}, {}};
  for (int k = 1; k <= kmax; ++k) {
    const auto r = reduced_density_matrix(gs, k);
    const std::size_t c = truncation_size_from_spectrum(entanglement_spectrum(r), a.fraction);
    const double dim = static_cast<double>(r.rho.rows());
    trunc.rows.push_back({std::to_string(k), std::to_string(c), fmt(dim), fmt(static_cast<double>(c) / dim), fmt(r.rho.trace())});
  }
  write_csv_atomic(dir / "truncation.csv", trunc);

  const auto part = partition_classes(*gs.basis);
  const auto masses = class_masses(gs, part);
  CsvTable mass{{"rank", "mass", "cumulative"}, {}};
  double acc = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    acc += masses[i];
    mass.rows.push_back({std::to_string(i + 1), fmt(masses[i]), fmt(acc)});
  }
  write_csv_atomic(dir / "class_mass.csv", mass);

  const Json report{{"N", a.n},
                    {"M", a.m},
                    {"K", a.k},
                    {"gauge", gs.gauged},
                    {"solver", gs.solver},
                    {"residual", gs.residual},
                    {"E0", gs.energy},
                    {"E1", gs.first_excited},
                    {"Emax", gs.max_energy},
                    {"gap_estimate", gap_estimate(gs)},
                    {"rho_trace", rdm.rho.trace()},
                    {"class_count", part.size()},
                    {"classes_for_threshold", cumulative_class_mass(gs, part, a.threshold)},
                    {"threshold", a.threshold},
                    {"config_hash", hash}};
  write_json_atomic(dir / "summary.json", report);
  out << report.dump() << "\n";
}

void cmd_mev(const ExactArgs& a, const fs::path& dir, const std::string& hash, std::ostream& out) {
  const auto gs = ground_state(a.n, a.m, a.gauge && a.m == 2);
  const auto mev = exact_mev(gs, a.k);
  write_csv_atomic(dir / "mev.csv", mev_csv(mev));
  const auto classes = mev_class_ordering(mev.probability, a.k, a.m);
  CsvTable t{{"class", "members", "probability"}, {}};
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::string members;
    for (std::size_t m : classes.classes[c]) members += (members.empty() ? "" : " ") + motif_string(m, a.m, a.k);
    t.rows.push_back({std::to_string(c), members, fmt(classes.value[c])});
  }
  write_csv_atomic(dir / "mev_classes.csv", t);
  const Json report{{"N", a.n}, {"M", a.m}, {"K", a.k}, {"gauge", gs.gauged}, {"E0", gs.energy},
                    {"class_count", classes.size()}, {"config_hash", hash}};
  write_json_atomic(dir / "summary.json", report);
  out << report.dump() << "\n";
}

void cmd_cft(const CftArgs& a, const fs::path& dir, const std::string& hash, std::ostream& out) {
  const auto gs = ground_state(a.reference_n, 2, true);
  const auto ref = exact_mev(gs, a.k);
  double beta = a.beta;
  Json calibration = nullptr;
  if (beta <= 0.0) {
    const auto cal = calibrate_beta(a.k, ref.probability);
    beta = cal.beta;
    calibration = {{"objective", cal.objective}, {"reference_N", a.reference_n}};
  }
  const auto model = cft_mev(a.k, beta);
  CsvTable t{{"motif", "cft", "exact", "difference"}, {}};
  double worst = 0.0;
  for (std::size_t m = 0; m < model.size(); ++m) {
    worst = std::max(worst, std::abs(model[m] - ref.probability[m]));
    t.rows.push_back({motif_string(m, 2, a.k), fmt(model[m]), fmt(ref.probability[m]), fmt(model[m] - ref.probability[m])});
  }
  write_csv_atomic(dir / "cft.csv", t);
  const Json report{{"K", a.k}, {"beta", beta}, {"calibration", calibration}, {"reference_N", a.reference_n},
                    {"max_abs_difference", worst}, {"config_hash", hash}};
  write_json_atomic(dir / "summary.json", report);
  out << report.dump() << "\n";
}

void cmd_train(const TrainArgs& a, std::uint64_t root_seed, const fs::path& dir, const std::string& hash,
               std::ostream& out) {
  if (a.seeds < 1) throw InvalidArgument("seeds must be at least 1");
  TrainConfig base;
  base.algorithm = algorithm_from_string(a.algorithm);
  base.sites = a.n;
  base.species = a.m;
  base.kernel = a.k;
  base.learning_rate = a.eta;
  base.n_opt = a.n_opt;
  base.max_iter = a.max_iter;
  base.checkpoint_every = a.checkpoint_every;
  SamplerConfig sampler;
  sampler.n_samples = a.samples;
  sampler.adjacent_only = a.adjacent;
  // Validate sizes before spending time on the reference solution.
  (void)CnnParams::zeros(a.k, a.m);
  if (a.n % a.m != 0 || a.k > a.n) throw InvalidArgument("need M | N and K <= N");

  std::optional<GroundStateSolution> gs;
  if (sector_dimension(a.n, a.m) <= 200000) gs = ground_state(a.n, a.m, true);

  std::vector<TrainingTrajectory> runs(static_cast<std::size_t>(a.seeds));
  std::atomic<int> next{0};
  std::mutex fail_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (int i = next++; i < a.seeds; i = next++) {
      try {
        TrainConfig cfg = base;
        cfg.seed = root_seed + static_cast<std::uint64_t>(i);
        SamplerConfig sc = sampler;
        sc.seed = cfg.seed;
        runs[static_cast<std::size_t>(i)] = train(cfg, sc);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min(a.jobs, a.seeds));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  Json summary_runs = Json::array();
  double min_rel = std::numeric_limits<double>::infinity();
  double sum_rel = 0.0;
  double best_energy = std::numeric_limits<double>::infinity();
  bool any_diverged = false;
  for (int i = 0; i < a.seeds; ++i) {
    const auto& traj = runs[static_cast<std::size_t>(i)];
    const std::uint64_t seed = root_seed + static_cast<std::uint64_t>(i);
    CsvTable log{{"iteration", "energy", "std_error", "grandsum", "acceptance"}, {}};
    for (const auto& r : traj.records)
      log.rows.push_back({std::to_string(r.iteration), fmt(r.energy), fmt(r.std_error), fmt(r.grandsum), fmt(r.acceptance)});
    const std::string tag = "seed" + std::to_string(seed);
    write_csv_atomic(dir / ("trajectory_" + tag + ".csv"), log);
    Json ckpts = Json::array();
    for (const auto& [it, p] : traj.checkpoints) ckpts.push_back({{"iteration", it}, {"params", params_to_json(p, a.n)}});
    write_json_atomic(dir / ("params_" + tag + ".json"),
                      Json{{"initial", params_to_json(traj.initial_params, a.n)},
                           {"final", params_to_json(traj.final_params, a.n)},
                           {"checkpoints", ckpts}});

    const double e_hat = estimated_energy(traj);
    Json run{{"seed", seed},
             {"energy", number_or_null(e_hat)},
             {"T_convergence", convergence_iteration(traj)},
             {"iterations", traj.records.size()},
             {"diverged", traj.diverged},
             {"message", traj.message}};
    any_diverged = any_diverged || traj.diverged;
    if (gs && std::isfinite(e_hat)) {
      const double gap = gap_estimate(*gs);
      const double rel = (e_hat - gs->energy) / gap;
      run["delta_E"] = e_hat - gs->energy;
      run["rel_delta_E"] = rel;
      run["relative_energy_error"] = (e_hat - gs->energy) / std::abs(gs->energy);
      min_rel = std::min(min_rel, rel);
      sum_rel += rel;
      best_energy = std::min(best_energy, e_hat);
    }
    summary_runs.push_back(run);
  }
  Json summary{{"N", a.n}, {"M", a.m}, {"K", a.k}, {"algorithm", a.algorithm}, {"eta", a.eta},
               {"n_opt", a.n_opt}, {"runs", summary_runs}, {"any_diverged", any_diverged}, {"config_hash", hash}};
  if (gs) {
    summary["E0"] = gs->energy;
    summary["gap_estimate"] = gap_estimate(*gs);
    summary["min_rel_delta_E"] = number_or_null(min_rel);
    summary["mean_rel_delta_E"] = number_or_null(sum_rel / a.seeds);
    summary["best_energy"] = number_or_null(best_energy);
  }
  write_json_atomic(dir / "summary.json", summary);
  out << summary.dump() << "\n";
}

double parse_number(const std::string& text, const std::string& column) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("column '" + column + "' holds a non-numeric value '" + text + "'");
  }
}

void write_regression(const RegressionResult& r, std::size_t removed, const fs::path& dir, const std::string& hash,
                      std::ostream& out) {
  CsvTable t{{"term", "coefficient", "std_error", "z", "stars"}, {}};
  for (std::size_t i = 0; i < r.names.size(); ++i)
    t.rows.push_back({r.names[i], fmt(r.coefficients[i]), fmt(r.std_errors[i]), fmt(r.z_scores[i]), r.stars(i)});
  write_csv_atomic(dir / "regression.csv", t);
  write_text_atomic(dir / "regression.txt", r.table());
  const Json report{{"r2", r.r2}, {"observations", r.observations}, {"condition_number", number_or_null(r.condition_number)},
                    {"removed_outliers", removed}, {"config_hash", hash}};
  write_json_atomic(dir / "report.json", report);
  out << r.table();
}

void cmd_regress(const RegressArgs& a, const fs::path& dir, const std::string& hash, std::ostream& out) {
  if (!a.mev.empty()) {
    const CsvTable t = read_csv(a.mev);
    const std::size_t mc = t.column("motif");
    const std::size_t pc = t.column("probability");
    if (t.rows.empty()) throw InvalidArgument("MEV table is empty");
    const int k = static_cast<int>(t.rows.front()[mc].size());
    std::vector<double> prob(motif_space_size(2, k), std::numeric_limits<double>::quiet_NaN());
    for (const auto& row : t.rows) {
      const auto cfg = row[mc];
      if (static_cast<int>(cfg.size()) != k) throw InvalidArgument("motif strings differ in length");
      std::vector<Label> labels;
      for (char c : cfg) {
        if (c != '0' && c != '1') throw InvalidArgument("motif features need binary motifs");
        labels.push_back(static_cast<Label>(c - '0'));
      }
      prob[motif_index(labels, 2)] = parse_number(row[pc], "probability");
    }
    for (double p : prob)
      if (std::isnan(p)) throw InvalidArgument("MEV table does not list every motif");
    write_regression(feature_regression(prob, k), 0, dir, hash, out);
    return;
  }
  if (a.input.empty() || a.target.empty()) throw InvalidArgument("regress needs --input and --target, or --mev");
  const CsvTable t = read_csv(a.input);
  std::vector<std::size_t> rows(t.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::size_t removed = 0;
  if (!a.outlier_column.empty()) {
    const std::size_t c = t.column(a.outlier_column);
    std::vector<double> d;
    for (const auto& row : t.rows) d.push_back(parse_number(row[c], a.outlier_column));
    const auto f = outlier_filter(d, a.cutoff);
    rows = f.kept;
    removed = f.removed;
  }
  std::vector<std::string> names{"Intercept"};
  std::vector<std::vector<std::size_t>> terms;
  for (const auto& f : a.features) {
    names.push_back(f);
    terms.push_back({t.column(f)});
  }
  for (const auto& term_text : a.interactions) {
    std::vector<std::size_t> cols;
    std::stringstream ss(term_text);
    std::string part;
    while (std::getline(ss, part, ':')) cols.push_back(t.column(part));
    if (cols.size() < 2) throw InvalidArgument("interaction '" + term_text + "' needs at least two columns joined by ':'");
    std::string label = term_text;
    std::replace(label.begin(), label.end(), ':', '*');
    names.push_back(label);
    terms.push_back(cols);
  }
  const std::size_t yc = t.column(a.target);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = t.rows[rows[i]];
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      double v = 1.0;
      for (std::size_t c : terms[j]) v *= parse_number(row[c], t.header[c]);
      x(r, static_cast<Eigen::Index>(j + 1)) = v;
    }
    y(r) = parse_number(row[yc], a.target);
  }
  write_regression(ols_regress(x, y, names), removed, dir, hash, out);
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << Json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shallow-CNN variational states for SU(M) exchange chains: exact oracles, training, analysis"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  BasisArgs basis_args;
  RankArgs rank_args;
  ExactArgs exact_args;
  ExactArgs mev_args;
  mev_args.k = 2;
  CftArgs cft_args;
  TrainArgs train_args;
  RegressArgs regress_args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Root seed for all random substreams");
    sub->add_option("--config", common.config, "JSON config file (flags override its keys)");
    sub->add_option("--out", common.out, std::string("Output directory (default: $") + kOutputRootEnv + "/motifcnn-<subcommand>)");
  };

  auto* basis = app.add_subcommand("basis", "Enumerate the basis and its symmetry classes");
  basis->add_option("--N", basis_args.n, "Sites");
  basis->add_option("--M", basis_args.m, "Species");
  add_common(basis);

  auto* rank = app.add_subcommand("motif-rank", "Exact motif count matrix ranks and the critical kernel size");
  rank->add_option("--N", rank_args.n, "Sites");
  rank->add_option("--M", rank_args.m, "Species");
  rank->add_option("--kmin", rank_args.kmin, "Smallest K reported");
  rank->add_option("--kmax", rank_args.kmax, "Largest K scanned (0: stop at the critical K)");
  rank->add_option("--export-k", rank_args.export_k, "Also write the count matrix for this K");
  add_common(rank);

  auto* exact = app.add_subcommand("exact", "Ground state, MEVs, entanglement spectrum, truncation and class-mass curves");
  exact->add_option("--N", exact_args.n, "Sites");
  exact->add_option("--M", exact_args.m, "Species");
  exact->add_option("--K", exact_args.k, "Subsystem size for MEVs and the spectrum");
  exact->add_option("--kmax", exact_args.kmax, "Largest K of the truncation curve (0: min(8, N-1))");
  exact->add_option("--gauge", exact_args.gauge, "Use the Marshall gauge (M = 2)");
  exact->add_option("--fraction", exact_args.fraction, "Spectrum weight to retain");
  exact->add_option("--threshold", exact_args.threshold, "Class mass to retain");
  add_common(exact);

  auto* mev = app.add_subcommand("mev", "Exact motif expectation values and their classes");
  mev->add_option("--N", mev_args.n, "Sites");
  mev->add_option("--M", mev_args.m, "Species");
  mev->add_option("--K", mev_args.k, "Motif size");
  mev->add_option("--gauge", mev_args.gauge, "Use the Marshall gauge (M = 2)");
  add_common(mev);

  auto* cft = app.add_subcommand("cft", "Thermal entanglement-Hamiltonian MEVs against exact ones");
  cft->add_option("--K", cft_args.k, "Motif size");
  cft->add_option("--beta", cft_args.beta, "Inverse temperature (<= 0: calibrate)");
  cft->add_option("--reference-N", cft_args.reference_n, "Chain length of the exact reference");
  add_common(cft);

  auto* tr = app.add_subcommand("train", "Variational Monte Carlo training across seeds");
  tr->add_option("--N", train_args.n, "Sites");
  tr->add_option("--M", train_args.m, "Species");
  tr->add_option("--K", train_args.k, "Kernel size");
  tr->add_option("--algorithm", train_args.algorithm, "original | symforce-init | symforce-traj");
  tr->add_option("--eta", train_args.eta, "Learning rate");
  tr->add_option("--n-opt", train_args.n_opt, "Update steps per sampled batch");
  tr->add_option("--max-iter", train_args.max_iter, "Sampled batches");
  tr->add_option("--samples", train_args.samples, "Samples per batch");
  tr->add_option("--seeds", train_args.seeds, "Number of seeds, starting at --seed");
  tr->add_option("--jobs", train_args.jobs, "Concurrent seeds");
  tr->add_option("--adjacent", train_args.adjacent, "Propose adjacent swaps only");
  tr->add_option("--checkpoint-every", train_args.checkpoint_every, "Checkpoint interval in iterations (0: none)");
  add_common(tr);

  auto* reg = app.add_subcommand("regress", "OLS regression tables");
  reg->add_option("--input", regress_args.input, "CSV of observations");
  reg->add_option("--target", regress_args.target, "Target column");
  reg->add_option("--features", regress_args.features, "Feature columns")->delimiter(',');
  reg->add_option("--interaction", regress_args.interactions, "Interaction terms such as a:b")->delimiter(',');
  reg->add_option("--outlier-column", regress_args.outlier_column, "Drop rows where this column is >= --cutoff");
  reg->add_option("--cutoff", regress_args.cutoff, "Outlier cutoff");
  reg->add_option("--mev", regress_args.mev, "MEV table: fit MEV ~ d_Neel + n_like + d_Neel*n_like");
  add_common(reg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "invalid_argument", e.what());
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (!common.config.empty()) apply_config(*sub, read_json(common.config));
    const Json cfg = resolved_config(*sub);
    const fs::path dir = output_dir(common, name);
    fs::create_directories(dir);
    const std::string hash = echo_config(dir, name, cfg);
    if (sub == basis) cmd_basis(basis_args, dir, hash, out);
    else if (sub == rank) cmd_motif_rank(rank_args, dir, hash, out);
    else if (sub == exact) cmd_exact(exact_args, dir, hash, out);
    else if (sub == mev) cmd_mev(mev_args, dir, hash, out);
    else if (sub == cft) cmd_cft(cft_args, dir, hash, out);
    else if (sub == tr) cmd_train(train_args, common.seed, dir, hash, out);
    else if (sub == reg) cmd_regress(regress_args, dir, hash, out);
  } catch (const InvalidArgument& e) {
    report_error(err, "invalid_argument", e.what());
    return 2;
  } catch (const CLI::ParseError& e) {
    report_error(err, "invalid_argument", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "invalid_argument", e.what());
    return 2;
  } catch (const NumericalError& e) {
    report_error(err, "numerical_failure", e.what());
    return 3;
  } catch (const std::exception& e) {
    report_error(err, "numerical_failure", e.what());
    return 3;
  }
  return 0;
}

}  // namespace motifcnn
