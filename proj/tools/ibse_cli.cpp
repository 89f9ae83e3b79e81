// Command-line harness for the smooth-extension spectral solver.
// Links only the public C API.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ibse.h"

namespace {

constexpr const char* kCsvHeader =
    "problem,k,n,n_bdy,dt,t_final,linf_error,slope,prep_fft_units,step_fft_units,steps";

std::string env_cache_dir() {
  const char* e = std::getenv("IBSE_CACHE_DIR");
  return e ? e : "";
}

std::string fmt(double v, int precision = 17) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

struct RunArgs {
  std::string problem;
  int k = 3;
  double theta = 0.0;
  double dt = 0.0;
  double t_final = 0.0;
  bool direct_ib = false;
  std::string cache_dir = env_cache_dir();
};

ibse_run* run_or_die(const RunArgs& a, int n) {
  ibse_run* r = nullptr;
  const ibse_status st =
      ibse_run_problem(a.problem.c_str(), a.k, n, a.theta, a.dt, a.t_final,
                       a.direct_ib ? 1 : 0,
                       a.cache_dir.empty() ? nullptr : a.cache_dir.c_str(), &r);
  if (st != IBSE_OK) {
    std::cerr << "error: " << ibse_last_error() << "\n";
    std::exit(1);
  }
  return r;
}

std::string csv_row(const ibse_run* r, const std::string& problem, int k, int n,
                    double linf, double slope) {
  const double fft = ibse_run_fft_seconds(r);
  const int steps = ibse_run_steps(r);
  std::ostringstream os;
  os << problem << ',' << k << ',' << n << ',' << ibse_run_boundary_nodes(r) << ','
     << fmt(ibse_run_dt(r)) << ',' << fmt(ibse_run_t_final(r)) << ',' << fmt(linf) << ','
     << fmt(slope) << ',' << fmt(ibse_run_prep_seconds(r) / fft, 6) << ','
     << fmt(ibse_run_run_seconds(r) / fft / std::max(1, steps), 6) << ',' << steps;
  return os.str();
}

// Streams rows as they are produced so a failed run late in a sweep does not
// discard the rows already computed.
class Emitter {
 public:
  explicit Emitter(const std::string& out_path) {
    if (!out_path.empty()) {
      file_.open(out_path);
      if (!file_) {
        std::cerr << "error: cannot open " << out_path << "\n";
        std::exit(1);
      }
      os_ = &file_;
    }
    *os_ << kCsvHeader << "\n" << std::flush;
  }
  void row(const std::string& r) { *os_ << r << "\n" << std::flush; }
  bool empty() const { return empty_; }
  void mark() { empty_ = false; }

 private:
  std::ofstream file_;
  std::ostream* os_ = &std::cout;
  bool empty_ = true;
};

bool has_analytic_error(const ibse_run* r) {
  const double e = ibse_run_linf_error(r);
  return e == e;  // not NaN
}

const double kNaN = std::nan("");

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier spectral solver with smooth extension into embedded boundaries"};
  app.require_subcommand(1);

  RunArgs args;
  std::string out_path;
  std::vector<int> sweep;
  int n_single = 64;
  int threads = 1;
  unsigned seed = 0;

  auto add_common = [&](CLI::App* sub, bool with_sweep) {
    sub->add_option("--problem", args.problem, "problem name")->required();
    sub->add_option("--k", args.k, "extension regularity order (1..3)");
    sub->add_option("--theta", args.theta, "extension penalty override (> 0)");
    sub->add_option("--dt", args.dt, "nominal timestep override (> 0)");
    sub->add_option("--t-final", args.t_final, "integration horizon override (> 0)");
    sub->add_flag("--direct-ib", args.direct_ib, "first-order forcing baseline (1D)");
    sub->add_option("--cache-dir", args.cache_dir,
                    "factorization cache directory (env IBSE_CACHE_DIR)");
    sub->add_option("--out", out_path, "write CSV here instead of stdout");
    sub->add_option("--threads", threads, "worker thread cap (serial build: 1)");
    sub->add_option("--seed", seed, "reserved for randomized probes");
    if (with_sweep)
      sub->add_option("--n-sweep", sweep, "comma-separated grid sizes")
          ->required()
          ->delimiter(',');
    else
      sub->add_option("--n", n_single, "grid size per axis")->required();
  };

  CLI::App* solve = app.add_subcommand("solve", "run one problem and report a CSV row");
  add_common(solve, false);

  CLI::App* conv = app.add_subcommand(
      "convergence", "run a resolution sweep and fit the convergence order");
  add_common(conv, true);

  CLI::App* timing =
      app.add_subcommand("timing", "report prep and per-step cost in FFT units");
  add_common(timing, true);

  CLI::App* audit = app.add_subcommand("delta-audit", "audit the coupling kernel table");
  bool perturb = false;
  audit->add_flag("--perturb", perturb, "corrupt one coefficient first (must fail)");

  CLI::App* cache = app.add_subcommand("cache", "manage the factorization cache");
  std::string cache_action;
  std::string cache_dir_opt = env_cache_dir();
  cache->add_option("action", cache_action, "list | clear")->required();
  cache->add_option("--cache-dir", cache_dir_opt, "cache directory (env IBSE_CACHE_DIR)");

  CLI11_PARSE(app, argc, argv);

  if (threads != 1) {
    const int eff = ibse_set_threads(threads);
    std::cerr << "note: serial build, using " << eff << " thread\n";
  }

  if (audit->parsed()) {
    std::string buf(8192, '\0');
    int pass = 0;
    if (ibse_delta_audit(perturb ? 1 : 0, buf.data(), buf.size(), &pass) != IBSE_OK) {
      std::cerr << "error: " << ibse_last_error() << "\n";
      return 1;
    }
    std::cout << buf.c_str();
    return pass ? 0 : 1;
  }

  if (cache->parsed()) {
    if (cache_dir_opt.empty()) {
      std::cerr << "error: no cache directory (use --cache-dir or IBSE_CACHE_DIR)\n";
      return 2;
    }
    namespace fs = std::filesystem;
    if (!fs::exists(cache_dir_opt)) {
      std::cout << (cache_action == "clear" ? "removed 0 factorizations\n" : "");
      return 0;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cache_dir_opt))
      if (e.is_regular_file() && e.path().extension() == ".fac") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (cache_action == "list") {
      for (const auto& p : files) {
        std::string buf(512, '\0');
        if (ibse_factorization_info(p.string().c_str(), buf.data(), buf.size()) == IBSE_OK)
          std::cout << p.filename().string() << ": " << buf.c_str() << "\n";
        else
          std::cout << p.filename().string() << ": unreadable (" << ibse_last_error()
                    << ")\n";
      }
    } else if (cache_action == "clear") {
      for (const auto& p : files) fs::remove(p);
      std::cout << "removed " << files.size() << " factorizations\n";
    } else {
      std::cerr << "error: unknown cache action '" << cache_action << "'\n";
      return 2;
    }
    return 0;
  }

  if (solve->parsed()) {
    Emitter em(out_path);
    ibse_run* r = run_or_die(args, n_single);
    em.row(csv_row(r, args.problem, args.k, n_single, ibse_run_linf_error(r), kNaN));
    ibse_run_free(r);
    return 0;
  }

  // convergence and timing: sweep over the requested sizes.
  Emitter em(out_path);
  std::vector<int> ns;
  std::vector<double> errs;
  ibse_run* prev = nullptr;
  int prev_n = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const int n = sweep[i];
    ibse_run* r = run_or_die(args, n);
    const bool analytic = has_analytic_error(r);
    if (analytic) {
      ns.push_back(n);
      errs.push_back(ibse_run_linf_error(r));
      double slope = kNaN;
      if (conv->parsed() && i + 1 == sweep.size() && ns.size() >= 2)
        ibse_fit_order(ns.data(), errs.data(), int(ns.size()), &slope);
      em.row(csv_row(r, args.problem, args.k, n, errs.back(), slope));
      em.mark();
      ibse_run_free(r);
    } else {
      // No analytic solution: report nested-grid differences on the coarser
      // run's row; the final pair's row carries the fitted order.
      if (prev) {
        double diff = 0.0;
        if (ibse_self_difference(prev, r, 0, &diff) != IBSE_OK) {
          std::cerr << "error: " << ibse_last_error() << "\n";
          return 1;
        }
        ns.push_back(prev_n);
        errs.push_back(diff);
        double slope = kNaN;
        if (conv->parsed() && i + 1 == sweep.size() && ns.size() >= 2)
          ibse_fit_order(ns.data(), errs.data(), int(ns.size()), &slope);
        em.row(csv_row(prev, args.problem, args.k, prev_n, diff, slope));
        em.mark();
        ibse_run_free(prev);
      }
      prev = r;
      prev_n = n;
    }
  }
  if (prev) {
    if (em.empty())
      em.row(csv_row(prev, args.problem, args.k, prev_n, ibse_run_linf_error(prev), kNaN));
    ibse_run_free(prev);
  }
  return 0;
}
