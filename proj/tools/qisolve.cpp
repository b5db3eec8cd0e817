// qisolve: command-line driver for the sampling-based low-rank solver.

#include <qisolve/qisolve.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace qisolve;

constexpr int kExitCheckFailed = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;

constexpr const char* kCsvHeader = "n,p,k,kappa,entry_queries,samples,err_max,tv";

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Parse: return kExitIo;
    case ErrorKind::Config:
    case ErrorKind::DimensionTooLarge: return kExitConfig;
    default: return kExitCheckFailed;
  }
}

struct Common {
  std::string matrix, vector, out;
  Index k = 1;
  Index p = 0;
  double epsilon = 0.1;
  double delta = 0.1;
  std::uint64_t seed = 0;
  double tau_b = 0.1;
  bool with_transpose = false;
  bool worst_case_p = false;
  bool no_oracle = false;
  std::size_t max_samples = 0;
  std::string memo = "on";

  SolverConfig config() const {
    SolverConfig cfg;
    cfg.k = k;
    cfg.p = p;
    cfg.epsilon = epsilon;
    cfg.delta = delta;
    cfg.seed = seed;
    cfg.tau_b = tau_b;
    cfg.max_samples = max_samples;
    cfg.memo = memo != "off";
    return cfg;
  }
};

void add_solver_flags(CLI::App* app, Common& c) {
  app->add_option("--matrix", c.matrix, "matrix file (MAT format)")->required();
  app->add_option("--vector", c.vector, "right-hand side (VEC format)")->required();
  app->add_option("--k", c.k, "rank")->required();
  app->add_option("--p", c.p, "sketch size (default: max(20k, k ceil(ln mn)))");
  app->add_option("--epsilon", c.epsilon, "additive error target");
  app->add_option("--delta", c.delta, "failure probability");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--tau-b", c.tau_b, "overlap gate for sampling, as a fraction of ||b||^2");
  app->add_option("--out", c.out, "report path (JSON)");
  app->add_option("--max-samples", c.max_samples, "cap on samples per estimate (0: none)");
  app->add_option("--memo", c.memo, "cache rows of V: on | off")->check(CLI::IsMember({"on", "off"}));
  app->add_flag("--with-transpose", c.with_transpose, "also build column sampling trees");
  app->add_flag("--worst-case-p,--paper-p", c.worst_case_p, "report the worst-case sketch size as well");
  app->add_flag("--no-oracle", c.no_oracle, "skip the dense comparison");
}

void emit(const nlohmann::json& report, const std::string& path) {
  const std::string text = report.dump(2);
  if (path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  os << text << '\n';
}

struct Loaded {
  io::MatrixFile file;
  ComplexSampledMatrix a;
  CVector b_dense;
  ComplexSampledVector b;
};

Loaded load(const Common& c) {
  Loaded l;
  l.file = io::load_matrix(c.matrix);
  l.a = l.file.sampled(c.with_transpose);
  l.b_dense = io::load_vector(c.vector);
  if (static_cast<Index>(l.b_dense.size()) != l.a.rows()) {
    throw Error(ErrorKind::Config, "vector length does not match the matrix row count");
  }
  l.b = ComplexSampledVector::from_dense(l.b_dense);
  return l;
}

bool oracle_enabled(const Common& c, Index m, Index n) {
  return !c.no_oracle && m <= oracle::kMaxDenseDim && n <= oracle::kMaxDenseDim;
}

void add_worst_case_p(nlohmann::json& report, const Common& c, const Solution& s) {
  if (!c.worst_case_p) return;
  const auto& d = s.state().description;
  report["worst_case_p"] = worst_case_sketch_size(d.k, d.kappa_hat(), c.epsilon, d.frobenius_sq);
}

// Draws `samples` indices and returns the histogram.
std::vector<std::uint64_t> histogram(const Solution& s, std::size_t samples, Rng& rng) {
  std::vector<std::uint64_t> counts(s.size(), 0);
  for (std::size_t t = 0; t < samples; ++t) ++counts[s.sample(rng)];
  return counts;
}

int run_query(const Common& c, const std::vector<Index>& js, bool psd) {
  Loaded l = load(c);
  const SolverConfig cfg = c.config();
  const DenseVectorAccess b_query(l.b_dense);
  Solution s = psd ? solve_psd(l.a, b_query, cfg) : prepare(l.a, l.b, cfg);
  nlohmann::json report = report_json(s);
  add_worst_case_p(report, c, s);
  const LedgerCounts before = l.a.ledger().snapshot();
  CVector exact;
  const bool check = oracle_enabled(c, l.a.rows(), l.a.cols());
  if (check) exact = oracle::pinv_solve(l.file.dense(), l.b_dense);
  nlohmann::json rows = nlohmann::json::array();
  double err_max = 0.0;
  for (Index j : js) {
    const Complex v = s.query(j);
    nlohmann::json row = {{"j", j}, {"value", {v.real(), v.imag()}}};
    if (check) {
      const double err = std::abs(v - exact(static_cast<Eigen::Index>(j)));
      err_max = std::max(err_max, err);
      row["exact"] = {exact(static_cast<Eigen::Index>(j)).real(), exact(static_cast<Eigen::Index>(j)).imag()};
      row["error"] = err;
    }
    rows.push_back(std::move(row));
  }
  report["queries"] = std::move(rows);
  report["query_ledger"] = to_json(l.a.ledger().snapshot() - before);
  bool pass = true;
  if (check) {
    pass = err_max <= c.epsilon;
    report["err_max"] = err_max;
    report["pass"] = pass;
  }
  emit(report, c.out);
  return pass ? 0 : kExitCheckFailed;
}

int run_sample(const Common& c, std::size_t samples, bool psd) {
  Loaded l = load(c);
  const SolverConfig cfg = c.config();
  const DenseVectorAccess b_query(l.b_dense);
  Solution s = psd ? solve_psd(l.a, b_query, cfg) : prepare(l.a, l.b, cfg);
  nlohmann::json report = report_json(s);
  add_worst_case_p(report, c, s);
  const RandomStreams streams(c.seed);
  if (!psd) {
    Rng rng = streams.stream("overlap");
    const double b2 = l.b_dense.squaredNorm();
    const auto& st = s.state();
    EstimatorParams params = st.params.front();
    const double overlap = overlap_estimate(s, l.b, params, rng);
    report["overlap"] = overlap;
    report["overlap_threshold"] = c.tau_b * b2;
    if (overlap < c.tau_b * b2) {
      report["gated"] = true;
      emit(report, c.out);
      std::cerr << "overlap " << overlap << " below tau_b * ||b||^2; not sampling\n";
      return kExitCheckFailed;
    }
  }
  Rng rng = streams.stream("rejection");
  RejectionStats stats;
  std::vector<std::uint64_t> counts(s.size(), 0);
  for (std::size_t t = 0; t < samples; ++t) ++counts[s.sample(rng, &stats)];
  report["samples"] = samples;
  report["acceptance_rate"] = stats.acceptance_rate();
  bool pass = true;
  if (oracle_enabled(c, l.a.rows(), l.a.cols())) {
    const CVector exact = oracle::pinv_solve(l.file.dense(), l.b_dense);
    const double tv = oracle::empirical_tv(counts, oracle::exact_distribution(exact));
    const double bound = c.epsilon + 3.0 * std::sqrt(static_cast<double>(s.size()) / static_cast<double>(samples));
    pass = tv <= bound;
    report["tv"] = tv;
    report["tv_bound"] = bound;
    report["pass"] = pass;
  }
  emit(report, c.out);
  return pass ? 0 : kExitCheckFailed;
}

int run_exact(const std::string& matrix, const std::string& vector, const std::string& out) {
  const io::MatrixFile f = io::load_matrix(matrix);
  const CVector b = io::load_vector(vector);
  const CVector x = oracle::pinv_solve(f.dense(), b);
  if (out.empty()) {
    io::write_vector(std::cout, x);
  } else {
    io::save_vector(out, x);
  }
  return 0;
}

int run_verify(const Common& c) {
  const io::MatrixFile f = io::load_matrix(c.matrix);
  const ComplexSampledMatrix a = f.sampled(c.with_transpose);
  const CMatrix dense = f.dense();
  const Index p = c.p ? c.p : suggested_sketch_size(c.k, a.rows(), a.cols());
  const SuccinctDescription d = subsample(a, c.k, p, c.seed);
  const SketchReport r = verify_sketch(d, dense);
  const CMatrix gram = dense.adjoint() * dense;
  const CMatrix v = dense_v(d, dense);
  const CMatrix approx = v * d.sigma_hat.cwiseAbs2().asDiagonal() * v.adjoint();
  const auto sq = oracle::sqrt_bound(gram, approx);
  const auto inv = oracle::inverse_bound(gram, approx);
  nlohmann::json report = {{"description", to_json(d)}, {"panel", to_json(r)}};
  report["sqrt_bound"] = {{"lhs", sq.lhs}, {"rhs", sq.rhs}, {"holds", sq.holds}};
  report["inverse_bound"] = {{"lhs", inv.lhs}, {"rhs", inv.rhs}, {"holds", inv.holds}};
  const bool pass = sq.holds && inv.holds;
  report["pass"] = pass;
  emit(report, c.out);
  return pass ? 0 : kExitCheckFailed;
}

int run_rank_probe(const std::string& matrix, Index p, std::uint64_t seed) {
  const io::MatrixFile f = io::load_matrix(matrix);
  const ComplexSampledMatrix a = f.sampled();
  if (p == 0) p = std::min<Index>(200, std::max<Index>(20, a.rows()));
  const RVector s = sketch_spectrum(a, p, seed);
  std::cout << "index,sigma\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) std::cout << i << ',' << io::format_double(s(i)) << '\n';
  return 0;
}

int run_gen(const InstanceSpec& spec, const std::string& prefix) {
  const Instance inst = generate(spec);
  const CMatrix a = inst.dense();
  io::save_matrix(prefix + ".mat", a);
  io::save_vector(prefix + ".vec", inst.b);
  nlohmann::json meta = to_json(spec);
  if (spec.m <= oracle::kMaxDenseDim && spec.n <= oracle::kMaxDenseDim) {
    const RVector s = oracle::nonzero_singular_values(a);
    meta["kappa_measured"] = s(0) / s(s.size() - 1);
    meta["rank_measured"] = s.size();
    meta["range_residual"] = (a.adjoint() * inst.b).norm();
  }
  emit(meta, prefix + ".json");
  return 0;
}

struct SweepCell {
  Index n = 0;
  Index p = 0;
  LedgerCounts counts;
  double err_max = std::nan("");
  double tv = std::nan("");
};

std::string csv_number(double v) { return std::isnan(v) ? "nan" : io::format_double(v); }

std::vector<Index> parse_list(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(static_cast<Index>(std::stoull(tok)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "bad list entry '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty list");
  return out;
}

void apply_fixed(const std::string& fixed, InstanceSpec& spec) {
  std::stringstream ss(fixed);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "expected key=value in --fixed, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    try {
      if (key == "k") spec.k = static_cast<Index>(std::stoull(val));
      else if (key == "kappa") spec.kappa = std::stod(val);
      else if (key == "norm") spec.norm = std::stod(val);
      else if (key == "profile") spec.profile = parse_profile(val);
      else throw Error(ErrorKind::Config, "unknown --fixed key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::Config, "bad value in --fixed: '" + tok + "'");
    }
  }
}

unsigned worker_count(std::size_t cells) {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SOLVE_THREADS")) {
    try {
      threads = static_cast<unsigned>(std::max(1, std::stoi(env)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "SOLVE_THREADS must be a positive integer");
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(threads, cells));
}

struct SweepArgs {
  std::string ns = "1000,10000";
  std::string fixed = "k=3,kappa=5";
  double m_ratio = 0.3;
  Index p = 100;
  double epsilon = 0.1;
  double delta = 0.1;
  std::size_t max_samples = 20000;
  std::size_t queries = 10;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  Index oracle_max = 5000;
  std::string memo = "off";
  double max_ratio = 3.0;
  std::string out;
};

SweepCell run_cell(const SweepArgs& args, const InstanceSpec& base, Index n) {
  InstanceSpec spec = base;
  spec.n = n;
  spec.m = std::max<Index>(spec.k + 1, static_cast<Index>(std::llround(args.m_ratio * static_cast<double>(n))));
  const Instance inst = generate(spec);
  const ComplexSampledMatrix a = inst.sampled();
  const ComplexSampledVector b = inst.sampled_b();
  SolverConfig cfg;
  cfg.k = spec.k;
  cfg.p = args.p;
  cfg.epsilon = args.epsilon;
  cfg.delta = args.delta;
  cfg.max_samples = args.max_samples;
  cfg.seed = args.seed;
  cfg.memo = args.memo != "off";
  const LedgerCounts before = a.ledger().snapshot() + b.ledger().snapshot();
  const Solution s = prepare(a, b, cfg);
  SweepCell cell;
  cell.n = n;
  cell.p = args.p;
  std::vector<Complex> values;
  std::vector<Index> js;
  for (std::size_t t = 0; t < args.queries; ++t) {
    js.push_back(static_cast<Index>((t * n) / std::max<std::size_t>(1, args.queries)));
    values.push_back(s.query(js.back()));
  }
  cell.counts = a.ledger().snapshot() + b.ledger().snapshot() - before;
  const bool oracle_on = spec.m <= args.oracle_max && spec.n <= args.oracle_max;
  if (oracle_on) {
    const CVector exact = oracle::pinv_solve(inst.dense(), inst.b);
    cell.err_max = 0.0;
    for (std::size_t t = 0; t < js.size(); ++t) {
      cell.err_max = std::max(cell.err_max, std::abs(values[t] - exact(static_cast<Eigen::Index>(js[t]))));
    }
    if (args.samples) {
      Rng rng = RandomStreams(args.seed).stream("rejection");
      const auto counts = histogram(s, args.samples, rng);
      cell.tv = oracle::empirical_tv(counts, oracle::exact_distribution(exact));
    }
  }
  return cell;
}

int run_sweep(const SweepArgs& args) {
  InstanceSpec base;
  base.profile = Profile::Geometric;
  base.seed = args.seed;
  apply_fixed(args.fixed, base);
  const std::vector<Index> ns = parse_list(args.ns);
  std::vector<SweepCell> cells(ns.size());
  std::vector<std::string> errors(ns.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < ns.size();) {
      try {
        cells[i] = run_cell(args, base, ns[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = worker_count(ns.size());
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) {
      std::cerr << "sweep cell failed: " << e << '\n';
      return kExitCheckFailed;
    }
  }

  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  for (const auto& cell : cells) {
    csv << cell.n << ',' << cell.p << ',' << base.k << ',' << io::format_double(base.kappa) << ','
        << cell.counts.entry_queries << ',' << cell.counts.samples << ',' << csv_number(cell.err_max) << ','
        << csv_number(cell.tv) << '\n';
  }
  if (args.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream os(args.out);
    if (!os) throw Error(ErrorKind::Io, "cannot open '" + args.out + "' for writing");
    os << csv.str();
  }
  const auto smallest = std::min_element(cells.begin(), cells.end(), [](auto& x, auto& y) { return x.n < y.n; });
  const auto largest = std::max_element(cells.begin(), cells.end(), [](auto& x, auto& y) { return x.n < y.n; });
  const double ratio = static_cast<double>(largest->counts.total()) / static_cast<double>(smallest->counts.total());
  const bool pass = ratio <= args.max_ratio;
  std::cerr << "query-count ratio " << ratio << (pass ? " <= " : " > ") << args.max_ratio
            << (pass ? " pass" : " FAIL") << '\n';
  return pass ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based solver for low-rank linear systems"};
  app.require_subcommand(1);

  InstanceSpec gen_spec;
  std::string gen_out = "instance", gen_profile = "linear", gen_bmode = "in-range";
  auto* gen = app.add_subcommand("gen", "generate an instance with prescribed rank and condition number");
  gen->add_option("--m", gen_spec.m)->required();
  gen->add_option("--n", gen_spec.n)->required();
  gen->add_option("--k", gen_spec.k)->required();
  gen->add_option("--kappa", gen_spec.kappa);
  gen->add_option("--norm", gen_spec.norm);
  gen->add_option("--profile", gen_profile)->check(CLI::IsMember({"linear", "geometric"}));
  gen->add_option("--b-mode", gen_bmode, "in-range | orthogonal | mixed(c)");
  gen->add_flag("--psd", gen_spec.psd, "Hermitian PSD instance (m = n)");
  gen->add_option("--seed", gen_spec.seed);
  gen->add_option("--out", gen_out, "output prefix: writes PREFIX.mat, PREFIX.vec, PREFIX.json");

  Common qc;
  std::vector<Index> js{0};
  auto* query = app.add_subcommand("query", "estimate entries of A^+ b");
  add_solver_flags(query, qc);
  query->add_option("--j", js, "entry indices");

  Common sc;
  std::size_t samples = 100000;
  auto* sample = app.add_subcommand("sample", "sample indices from the distribution of A^+ b");
  add_solver_flags(sample, sc);
  sample->add_option("--samples", samples);

  Common pc;
  std::string mode = "query";
  std::vector<Index> pjs{0};
  std::size_t psamples = 100000;
  auto* psd = app.add_subcommand("psd", "PSD variant with query-only b");
  add_solver_flags(psd, pc);
  psd->add_option("--mode", mode)->check(CLI::IsMember({"query", "sample"}));
  psd->add_option("--j", pjs);
  psd->add_option("--samples", psamples);

  std::string ex_matrix, ex_vector, ex_out;
  auto* exact = app.add_subcommand("exact", "dense pseudo-inverse solve");
  exact->add_option("--matrix", ex_matrix)->required();
  exact->add_option("--vector", ex_vector)->required();
  exact->add_option("--out", ex_out);

  Common vc;
  auto* verify = app.add_subcommand("verify", "dense property panel for one sketch");
  verify->add_option("--matrix", vc.matrix)->required();
  verify->add_option("--k", vc.k)->required();
  verify->add_option("--p", vc.p);
  verify->add_option("--seed", vc.seed);
  verify->add_option("--out", vc.out);
  verify->add_flag("--with-transpose", vc.with_transpose);

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "ledger growth across problem sizes");
  sweep->add_option("--n", sw.ns, "comma-separated column counts");
  sweep->add_option("--fixed", sw.fixed, "k=..,kappa=..[,norm=..,profile=..]");
  sweep->add_option("--m-ratio", sw.m_ratio, "rows as a fraction of n");
  sweep->add_option("--p", sw.p);
  sweep->add_option("--epsilon", sw.epsilon);
  sweep->add_option("--delta", sw.delta);
  sweep->add_option("--max-samples", sw.max_samples);
  sweep->add_option("--queries", sw.queries);
  sweep->add_option("--samples", sw.samples, "solution samples per cell for the TV column (0: skip)");
  sweep->add_option("--seed", sw.seed);
  sweep->add_option("--oracle-max", sw.oracle_max, "largest dimension compared against the dense oracle");
  sweep->add_option("--memo", sw.memo)->check(CLI::IsMember({"on", "off"}));
  sweep->add_option("--max-ratio", sw.max_ratio);
  sweep->add_option("--out", sw.out, "CSV path");

  std::string rp_matrix;
  Index rp_p = 0;
  std::uint64_t rp_seed = 0;
  auto* probe = app.add_subcommand("rank-probe", "singular values of the sketched W");
  probe->add_option("--matrix", rp_matrix)->required();
  probe->add_option("--p", rp_p);
  probe->add_option("--seed", rp_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      gen_spec.profile = parse_profile(gen_profile);
      gen_spec.b = parse_bmode(gen_bmode);
      return run_gen(gen_spec, gen_out);
    }
    if (*query) return run_query(qc, js, false);
    if (*sample) return run_sample(sc, samples, false);
    if (*psd) return mode == "query" ? run_query(pc, pjs, true) : run_sample(pc, psamples, true);
    if (*exact) return run_exact(ex_matrix, ex_vector, ex_out);
    if (*verify) return run_verify(vc);
    if (*sweep) return run_sweep(sw);
    if (*probe) return run_rank_probe(rp_matrix, rp_p, rp_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return 0;
}
