// overlap-lab: analytic laws, seeded simulation and verification suites for
// overlap times and overlap counts in infinite-server queues.
//
// Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 verification
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json_config.hpp"
#include "overlap/csv.hpp"
#include "overlap/suites.hpp"

namespace fs = std::filesystem;
using namespace overlap;
using overlap::cli::ConfigError;
using overlap::cli::IoError;
using overlap::cli::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

std::optional<std::uint64_t> env_seed() {
    if (const char* raw = std::getenv("OVERLAP_LAB_SEED")) {
        try {
            return std::stoull(raw);
        } catch (const std::exception&) {
            throw ConfigError("OVERLAP_LAB_SEED is not a valid integer");
        }
    }
    return std::nullopt;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

json parse_inline_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": invalid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateFlags {
    std::string config_path;
    std::optional<double> lambda, mu;
    std::string arrival_json, service_json, interarrival_json, profile_json;
    std::optional<std::int64_t> n;
    std::optional<double> horizon;
    std::optional<double> warmup_time;
    std::optional<std::int64_t> warmup_customers;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replications;
    std::optional<double> delta;
    std::optional<int> k_max;
    std::string out_dir;
};

cli::SimulateConfig resolve_simulate_config(const SimulateFlags& flags) {
    cli::SimulateConfig cfg;
    if (!flags.config_path.empty())
        cfg = cli::simulate_config_from_json(load_json_file(flags.config_path));

    // Flags win over the config file.
    if (!flags.arrival_json.empty())
        cfg.run.arrival =
            cli::arrival_from_json(parse_inline_json(flags.arrival_json, "--arrival"), "--arrival");
    if (!flags.profile_json.empty())
        cfg.run.arrival = PoissonProfile{
            cli::profile_from_json(parse_inline_json(flags.profile_json, "--profile"), "--profile")};
    if (!flags.interarrival_json.empty())
        cfg.run.arrival = RenewalArrivals{cli::dist_from_json(
            parse_inline_json(flags.interarrival_json, "--interarrival"), "--interarrival")};
    if (flags.lambda) cfg.run.arrival = PoissonConstant{*flags.lambda};
    if (!flags.service_json.empty())
        cfg.run.service =
            cli::dist_from_json(parse_inline_json(flags.service_json, "--service"), "--service");
    if (flags.mu) cfg.run.service = Exponential{*flags.mu};
    if (flags.n) {
        cfg.run.stop_customers = *flags.n;
        cfg.run.stop_horizon.reset();
    }
    if (flags.horizon) {
        cfg.run.stop_horizon = *flags.horizon;
        cfg.run.stop_customers.reset();
    }
    if (flags.warmup_time) {
        cfg.run.warmup_time = *flags.warmup_time;
        cfg.run.warmup_customers.reset();
    }
    if (flags.warmup_customers) {
        cfg.run.warmup_customers = *flags.warmup_customers;
        cfg.run.warmup_time.reset();
    }
    if (flags.seed) cfg.run.seed = *flags.seed;
    else if (flags.config_path.empty()) cfg.run.seed = env_seed().value_or(cfg.run.seed);
    if (flags.replications) cfg.run.replications = *flags.replications;
    if (flags.delta) cfg.delta = *flags.delta;
    if (flags.k_max) cfg.k_max = *flags.k_max;
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    try {
        cfg.run.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.delta && *cfg.delta < 0.0) throw ConfigError("delta must be nonnegative");
    if (cfg.k_max < 0) throw ConfigError("k_max must be nonnegative");
    return cfg;
}

std::string rep_suffix(std::int64_t rep, std::int64_t total) {
    return total > 1 ? "_r" + std::to_string(rep) : "";
}

int cmd_simulate(const SimulateFlags& flags) {
    const cli::SimulateConfig cfg = resolve_simulate_config(flags);
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.output_dir);
    {
        std::ofstream echo(fs::path(cfg.output_dir) / "resolved_config.json");
        if (!echo) throw IoError("cannot write resolved_config.json");
        echo << cli::simulate_config_to_json(cfg).dump(2) << "\n";
    }
    for (std::int64_t rep = 0; rep < cfg.run.replications; ++rep) {
        const auto records = run(cfg.run, rep);
        const std::string suffix = rep_suffix(rep, cfg.run.replications);
        const fs::path dir(cfg.output_dir);
        {
            CsvWriter w((dir / ("customers" + suffix + ".csv")).string());
            w.row({"index", "arrival", "service", "departure"});
            for (const auto& r : records)
                w.row({std::to_string(r.index), fmt_g9(r.arrival), fmt_g9(r.service),
                       fmt_g9(r.departure)});
            w.close();
        }
        for (int k = 1; k <= cfg.k_max; ++k) {
            CsvWriter w((dir / ("overlaps_k" + std::to_string(k) + suffix + ".csv")).string());
            w.row({"n", "k", "overlap"});
            for (const auto& s : overlap_pairs(records, k))
                w.row({std::to_string(s.n), std::to_string(s.k), fmt_g9(s.value)});
            w.close();
        }
        TagFilter filter;
        filter.warmup_time = cfg.run.warmup_time;
        filter.warmup_customers = cfg.run.warmup_customers;
        filter.censor_horizon = cfg.run.stop_horizon;  // defaults to last arrival otherwise
        {
            CsvWriter w((dir / ("counts" + suffix + ".csv")).string());
            w.row({"index", "upon", "during", "total"});
            for (const auto& c : count_overlaps(records, filter))
                w.row({std::to_string(c.index), std::to_string(c.upon), std::to_string(c.during),
                       std::to_string(c.total)});
            w.close();
        }
        if (cfg.delta) {
            CsvWriter w((dir / ("residual_counts" + suffix + ".csv")).string());
            w.row({"index", "upon", "during", "total", "window"});
            for (const auto& c : count_residual_overlaps(records, *cfg.delta, filter))
                w.row({std::to_string(c.index), std::to_string(c.upon), std::to_string(c.during),
                       std::to_string(c.total), std::to_string(c.window)});
            w.close();
        }
        std::cout << "replication " << rep << ": " << records.size() << " customers -> "
                  << cfg.output_dir << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analytic
// ---------------------------------------------------------------------------

struct AnalyticFlags {
    std::string selector;
    std::optional<double> lambda, mu, t, q0, delta, z, a, x, scale;
    std::optional<long long> k;
    std::optional<int> k_max;
    std::optional<double> t_max;
    int points = 101;
    std::string service_json, interarrival_json, profile_json, cohort_json;
    std::vector<double> weights, rates;
    bool as_json = false;
    bool general_form = false;
    std::string variance_convention = "proof";
};

double require(const std::optional<double>& v, const char* flag) {
    if (!v) throw ConfigError(std::string("missing required flag ") + flag);
    return *v;
}

long long require_k(const AnalyticFlags& f) {
    if (!f.k) throw ConfigError("missing required flag --k");
    return *f.k;
}

DistSpec service_from_flags(const AnalyticFlags& f) {
    if (!f.service_json.empty())
        return cli::dist_from_json(parse_inline_json(f.service_json, "--service"), "--service");
    if (f.mu) return Exponential{*f.mu};
    throw ConfigError("provide --service JSON or --mu (exponential shortcut)");
}

RateProfile profile_from_flags(const AnalyticFlags& f) {
    if (!f.profile_json.empty())
        return cli::profile_from_json(parse_inline_json(f.profile_json, "--profile"), "--profile");
    if (f.lambda) return RateProfile::constant(*f.lambda);
    throw ConfigError("provide --profile JSON or --lambda (constant rate)");
}

void print_value(double v) { std::cout << fmt_g9(v) << "\n"; }

void print_pmf(const Pmf& pmf, int k_max, bool as_json) {
    if (as_json) {
        json j;
        json p = json::array();
        for (int k = 0; k <= k_max; ++k)
            p.push_back(k < static_cast<int>(pmf.p.size()) ? pmf.p[static_cast<std::size_t>(k)]
                                                           : 0.0);
        j["p"] = p;
        j["tail"] = pmf.tail;
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::cout << "k,p\n";
    for (int k = 0; k <= k_max; ++k) {
        const double p =
            k < static_cast<int>(pmf.p.size()) ? pmf.p[static_cast<std::size_t>(k)] : 0.0;
        std::cout << k << "," << fmt_g9(p) << "\n";
    }
}

void print_tail_curve(const TailCurve& curve, bool as_json) {
    if (as_json) {
        json j;
        j["atom_at_zero"] = curve.atom_at_zero;
        j["t"] = curve.t;
        j["value"] = curve.value;
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::cout << "t,tail\n";
    for (std::size_t i = 0; i < curve.t.size(); ++i)
        std::cout << fmt_g9(curve.t[i]) << "," << fmt_g9(curve.value[i]) << "\n";
}

void print_mean_var(const MeanVar& mv, bool as_json) {
    if (as_json) {
        json j;
        j["mean"] = mv.mean;
        j["variance"] = mv.variance;
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::cout << "mean,variance\n" << fmt_g9(mv.mean) << "," << fmt_g9(mv.variance) << "\n";
}

int cmd_analytic(const AnalyticFlags& f) {
    const std::string& sel = f.selector;
    if (sel == "lower-gamma" || sel == "upper-gamma") {
        const double a = require(f.a, "--a");
        const double x = require(f.x, "--x");
        const bool lower = sel == "lower-gamma";
        if (f.scale) {
            print_value(lower ? lower_incomplete_gamma_scaled(a, x, *f.scale)
                              : upper_incomplete_gamma_scaled(a, x, *f.scale));
        } else {
            print_value(lower ? lower_incomplete_gamma(a, x) : upper_incomplete_gamma(a, x));
        }
        return kExitOk;
    }
    if (sel == "excess-cdf") {
        print_value(excess_cdf(service_from_flags(f), require(f.t, "--t")));
        return kExitOk;
    }
    if (sel == "exp-minus-erlang") {
        const auto v = exp_minus_erlang_law(require(f.mu, "--mu"), static_cast<int>(require_k(f)),
                                            require(f.lambda, "--lambda"), require(f.z, "--z"));
        std::cout << fmt_g9(v.value) << " "
                  << (v.branch == DiffBranch::kDensity ? "density" : "cumulative") << "\n";
        return kExitOk;
    }
    if (sel == "kfold-cdf") {
        DistSpec dist = !f.interarrival_json.empty()
                            ? cli::dist_from_json(
                                  parse_inline_json(f.interarrival_json, "--interarrival"),
                                  "--interarrival")
                            : service_from_flags(f);
        print_value(kfold_convolution_cdf(dist, static_cast<int>(require_k(f)),
                                          require(f.x, "--x")));
        return kExitOk;
    }
    if (sel == "overlap-tail-mm" || sel == "overlap-atom-mm") {
        const MMParams p{require(f.lambda, "--lambda"), require(f.mu, "--mu")};
        const int k = static_cast<int>(require_k(f));
        if (sel == "overlap-atom-mm") {
            print_value(overlap_atom_mm(p, k));
        } else if (f.t_max) {
            print_tail_curve(overlap_tail_mm_curve(p, k, *f.t_max, f.points), f.as_json);
        } else {
            print_value(overlap_tail_mm(p, k, require(f.t, "--t")));
        }
        return kExitOk;
    }
    if (sel == "overlap-tail-gid") {
        if (f.interarrival_json.empty())
            throw ConfigError("overlap-tail-gid requires --interarrival JSON");
        const DistSpec inter = cli::dist_from_json(
            parse_inline_json(f.interarrival_json, "--interarrival"), "--interarrival");
        const int k = static_cast<int>(require_k(f));
        const double d = require(f.delta, "--delta");
        if (f.t_max)
            print_tail_curve(overlap_tail_gid_curve(inter, k, d, *f.t_max, f.points), f.as_json);
        else
            print_value(overlap_tail_gid(inter, k, d, require(f.t, "--t")));
        return kExitOk;
    }
    if (sel == "qinf-mm") {
        print_value(qinf_mm({require(f.lambda, "--lambda"), require(f.mu, "--mu")},
                            f.q0.value_or(0.0), require(f.t, "--t")));
        return kExitOk;
    }
    if (sel == "qinf-general") {
        print_value(
            qinf_general(profile_from_flags(f), service_from_flags(f), require(f.t, "--t")));
        return kExitOk;
    }
    if (sel == "during-pmf") {
        const double lambda = require(f.lambda, "--lambda");
        const DistSpec service = service_from_flags(f);
        if (f.k_max) {
            print_pmf(during_service_pmf_vec(lambda, service), *f.k_max, f.as_json);
        } else if (f.general_form) {
            print_value(during_service_pmf_general(lambda, service, require_k(f)));
        } else {
            print_value(during_service_pmf(lambda, service, require_k(f)));
        }
        return kExitOk;
    }
    if (sel == "total-pmf-mm") {
        const MMParams p{require(f.lambda, "--lambda"), require(f.mu, "--mu")};
        const double t = require(f.t, "--t");
        if (f.k_max)
            print_pmf(total_overlap_pmf_mm_vec(p, t), *f.k_max, f.as_json);
        else
            print_value(total_overlap_pmf_mm(p, t, require_k(f)));
        return kExitOk;
    }
    if (sel == "total-pmf-transient") {
        const RateProfile profile = profile_from_flags(f);
        const DistSpec service = service_from_flags(f);
        const double t = require(f.t, "--t");
        if (f.k_max)
            print_pmf(total_overlap_pmf_transient_vec(profile, service, t), *f.k_max, f.as_json);
        else
            print_value(total_overlap_pmf_transient(profile, service, t, require_k(f)));
        return kExitOk;
    }
    if (sel == "total-mean-var-mm") {
        const MMParams p{require(f.lambda, "--lambda"), require(f.mu, "--mu")};
        VarianceConvention conv;
        if (f.variance_convention == "proof") conv = VarianceConvention::kProofChain;
        else if (f.variance_convention == "printed") conv = VarianceConvention::kPrintedStatement;
        else throw ConfigError("--variance-convention must be 'proof' or 'printed'");
        print_mean_var(total_overlap_mean_var_mm(p, require(f.t, "--t"), conv), f.as_json);
        return kExitOk;
    }
    if (sel == "total-pmf-mh" || sel == "total-mean-mh") {
        if (f.weights.empty() || f.rates.empty())
            throw ConfigError(sel + " requires --weights and --rates");
        const double lambda = require(f.lambda, "--lambda");
        const double t = require(f.t, "--t");
        if (sel == "total-mean-mh") {
            print_value(total_overlap_mean_mh(f.weights, f.rates, lambda, t));
        } else if (f.k_max) {
            print_pmf(total_overlap_pmf_mh_vec(f.weights, f.rates, lambda, t), *f.k_max,
                      f.as_json);
        } else {
            print_value(total_overlap_pmf_mh(f.weights, f.rates, lambda, t, require_k(f)));
        }
        return kExitOk;
    }
    if (sel == "residual-mean-var") {
        print_mean_var(residual_mean_var(require(f.lambda, "--lambda"), service_from_flags(f),
                                         require(f.t, "--t"), require(f.delta, "--delta")),
                       f.as_json);
        return kExitOk;
    }
    if (sel == "residual-during") {
        const double lambda = require(f.lambda, "--lambda");
        const DistSpec service = service_from_flags(f);
        const double d = require(f.delta, "--delta");
        if (f.k_max)
            print_pmf(residual_during_pmf_vec(lambda, service, d), *f.k_max, f.as_json);
        else
            print_value(residual_during_pmf(lambda, service, d, require_k(f)));
        return kExitOk;
    }
    if (sel == "residual-z") {
        const double lambda = require(f.lambda, "--lambda");
        const double mu = require(f.mu, "--mu");
        const DistSpec cohort =
            !f.cohort_json.empty()
                ? cli::dist_from_json(parse_inline_json(f.cohort_json, "--cohort"), "--cohort")
                : DistSpec(Exponential{mu});
        const double d = require(f.delta, "--delta");
        if (f.k_max)
            print_pmf(residual_z_pmf_vec(lambda, mu, cohort, d), *f.k_max, f.as_json);
        else
            print_value(residual_z_pmf(lambda, mu, cohort, d, require_k(f)));
        return kExitOk;
    }
    throw ConfigError("unknown analytic selector '" + sel + "'");
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyFlags {
    std::string suite;
    std::optional<std::int64_t> n;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<double> ks_threshold, tv_threshold, z_threshold, chi2_floor;
    std::optional<double> atom_window, mle_window, mean_window, residual_mean_window,
        lognormal_tv;
    std::optional<std::int64_t> variance_n;
};

int cmd_verify(const VerifyFlags& flags) {
    const auto& names = suite_names();
    if (flags.suite != "all" &&
        std::find(names.begin(), names.end(), flags.suite) == names.end())
        throw ConfigError("unknown verification suite '" + flags.suite + "'");
    SuiteOptions opts;
    if (flags.n) opts.n = *flags.n;
    opts.seed = flags.seed ? *flags.seed : env_seed().value_or(opts.seed);
    if (flags.ks_threshold) opts.ks_fixed_threshold = *flags.ks_threshold;
    if (flags.tv_threshold) opts.policy.tv_threshold = *flags.tv_threshold;
    if (flags.z_threshold) opts.policy.z_threshold = *flags.z_threshold;
    if (flags.chi2_floor) opts.policy.chi2_p_floor = *flags.chi2_floor;
    if (flags.atom_window) opts.atom_abs_window = *flags.atom_window;
    if (flags.mle_window) opts.mle_rate_window = *flags.mle_window;
    if (flags.mean_window) opts.mean_rel_window = *flags.mean_window;
    if (flags.residual_mean_window) opts.residual_mean_rel_window = *flags.residual_mean_window;
    if (flags.lognormal_tv) opts.lognormal_tv_threshold = *flags.lognormal_tv;
    if (flags.variance_n) opts.variance_arbitration_n = *flags.variance_n;

    std::vector<VerificationReport> reports;
    std::optional<std::string> error;
    try {
        reports = run_suite(flags.suite, opts);
    } catch (const std::exception& e) {
        error = e.what();  // partial reports still written below
    }
    std::error_code ec;
    fs::create_directories(flags.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + flags.out_dir);
    json doc;
    doc["suite"] = flags.suite;
    doc["config"] = cli::suite_options_to_json(opts);
    json checks = json::array();
    for (const auto& r : reports) checks.push_back(cli::report_to_json(r));
    if (error) {
        json err;
        err["check"] = flags.suite + "/error";
        err["pass"] = false;
        err["notes"] = *error;
        checks.push_back(err);
    }
    doc["checks"] = checks;
    const fs::path report_path = fs::path(flags.out_dir) / "report.json";
    {
        std::ofstream out(report_path);
        if (!out) throw IoError("cannot write " + report_path.string());
        out << doc.dump(2) << "\n";
    }
    bool all_pass = !error.has_value();
    for (const auto& r : reports) {
        std::cout << summary_line(r) << "\n";
        if (!r.pass) all_pass = false;
    }
    if (error) std::cout << "ERROR " << flags.suite << ": " << *error << "\n";
    std::cout << "report: " << report_path.string() << "\n";
    return all_pass ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// plotdata
// ---------------------------------------------------------------------------

struct PlotFlags {
    std::string source;
    std::string column;
    int bins = 50;
    bool integer_bins = false;
    std::optional<double> min, max;
    std::string out_prefix;
};

int cmd_plotdata(const PlotFlags& flags) {
    if (!fs::exists(flags.source)) {
        std::cerr << "plotdata: source not found: " << flags.source << "\n";
        return kExitIo;
    }
    CsvTable table;
    try {
        table = read_csv(flags.source);
    } catch (const std::exception& e) {
        std::cerr << "plotdata: " << e.what() << "\n";
        return kExitIo;
    }
    std::vector<double> data;
    try {
        data = table.numeric_column(flags.column);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const std::string prefix =
        flags.out_prefix.empty() ? fs::path(flags.source).stem().string() : flags.out_prefix;
    CsvWriter hist_out(prefix + "_hist.csv");
    hist_out.row({"bin_left", "bin_right", "count", "density"});
    CsvWriter cdf_out(prefix + "_cdf.csv");
    cdf_out.row({"x", "F"});
    if (data.empty()) {
        std::cerr << "plotdata: no data rows in column '" << flags.column
                  << "'; emitting header-only files\n";
        hist_out.close();
        cdf_out.close();
        return kExitOk;
    }
    double lo = flags.min.value_or(*std::min_element(data.begin(), data.end()));
    double hi = flags.max.value_or(*std::max_element(data.begin(), data.end()));
    int bins = flags.bins;
    if (flags.integer_bins) {
        lo = std::floor(lo) - 0.5;
        hi = std::ceil(hi) + 0.5;
        bins = static_cast<int>(hi - lo);
    } else if (hi <= lo) {
        hi = lo + 1.0;  // degenerate single-value data
    }
    if (bins < 1) throw ConfigError("plotdata: need at least one bin");
    const Histogram h = Histogram::build(data, bins, lo, hi);
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        hist_out.row({fmt_g9(h.edges[b]), fmt_g9(h.edges[b + 1]), std::to_string(h.counts[b]),
                      fmt_g9(h.densities[b])});
    hist_out.close();
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i + 1 < data.size() && data[i + 1] == data[i]) continue;  // last tie carries the step
        cdf_out.row({fmt_g9(data[i]), fmt_g9(static_cast<double>(i + 1) / n)});
    }
    cdf_out.close();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"overlap-lab: overlap-time and overlap-count laws for infinite-server queues"};
    app.require_subcommand(1);

    SimulateFlags sim_flags;
    auto* sim = app.add_subcommand("simulate", "run a seeded GI/G/inf simulation and emit CSVs");
    sim->add_option("--config", sim_flags.config_path, "JSON config file (flags override)");
    sim->add_option("--lambda", sim_flags.lambda, "Poisson arrival rate shortcut");
    sim->add_option("--mu", sim_flags.mu, "exponential service rate shortcut");
    sim->add_option("--arrival", sim_flags.arrival_json, "arrival spec as inline JSON");
    sim->add_option("--service", sim_flags.service_json, "service spec as inline JSON");
    sim->add_option("--interarrival", sim_flags.interarrival_json,
                    "renewal inter-arrival spec as inline JSON");
    sim->add_option("--profile", sim_flags.profile_json, "rate profile as inline JSON");
    sim->add_option("--n", sim_flags.n, "stop after this many customers");
    sim->add_option("--horizon", sim_flags.horizon, "stop at this time horizon");
    sim->add_option("--warmup-time", sim_flags.warmup_time, "tag only arrivals after this time");
    sim->add_option("--warmup-customers", sim_flags.warmup_customers,
                    "tag only customers after this count");
    sim->add_option("--seed", sim_flags.seed, "random seed (default: OVERLAP_LAB_SEED or 1)");
    sim->add_option("--replications", sim_flags.replications, "independent replications");
    sim->add_option("--delta", sim_flags.delta, "residual overlap threshold; emits residual counts");
    sim->add_option("--k-max", sim_flags.k_max, "emit overlap pairs for lags 1..k");
    sim->add_option("--out", sim_flags.out_dir, "output directory");

    AnalyticFlags an_flags;
    auto* an = app.add_subcommand("analytic", "evaluate a closed-form law");
    an->add_option("selector", an_flags.selector, "formula selector")->required();
    an->add_option("--lambda", an_flags.lambda, "arrival rate");
    an->add_option("--mu", an_flags.mu, "service rate (exponential shortcut)");
    an->add_option("--t", an_flags.t, "time argument");
    an->add_option("--q0", an_flags.q0, "initial queue length");
    an->add_option("--delta", an_flags.delta, "residual threshold / deterministic service value");
    an->add_option("--z", an_flags.z, "difference-law argument");
    an->add_option("--a", an_flags.a, "gamma shape argument");
    an->add_option("--x", an_flags.x, "gamma / convolution argument");
    an->add_option("--scale", an_flags.scale, "gamma scale transform");
    an->add_option("--k", an_flags.k, "count / lag argument");
    an->add_option("--k-max", an_flags.k_max, "emit the pmf for k = 0..k-max");
    an->add_option("--t-max", an_flags.t_max, "emit a tail curve on [0, t-max]");
    an->add_option("--points", an_flags.points, "grid points for tail curves");
    an->add_option("--service", an_flags.service_json, "service spec as inline JSON");
    an->add_option("--interarrival", an_flags.interarrival_json, "inter-arrival spec JSON");
    an->add_option("--profile", an_flags.profile_json, "rate profile JSON");
    an->add_option("--cohort", an_flags.cohort_json, "cohort service spec JSON (residual-z)");
    an->add_option("--weights", an_flags.weights, "hyper-exponential weights");
    an->add_option("--rates", an_flags.rates, "hyper-exponential rates");
    an->add_flag("--json", an_flags.as_json, "emit JSON instead of CSV");
    an->add_flag("--general", an_flags.general_form,
                 "use the general expectation route (during-pmf)");
    an->add_option("--variance-convention", an_flags.variance_convention,
                   "O(t) variance convention: proof | printed");

    VerifyFlags vf_flags;
    auto* vf = app.add_subcommand("verify", "run a verification suite and write report.json");
    vf->add_option("suite", vf_flags.suite, "fig1-2|fig3|fig4-5|mtd|fig6|fig7|fig8|"
                                            "variance-arbitration|all")
        ->required();
    vf->add_option("--n", vf_flags.n, "sample scale");
    vf->add_option("--seed", vf_flags.seed, "random seed (default: OVERLAP_LAB_SEED or 424242)");
    vf->add_option("--out", vf_flags.out_dir, "directory for report.json");
    vf->add_option("--ks-threshold", vf_flags.ks_threshold, "fixed KS threshold");
    vf->add_option("--tv-threshold", vf_flags.tv_threshold, "total-variation threshold");
    vf->add_option("--z-threshold", vf_flags.z_threshold, "z-score threshold");
    vf->add_option("--chi2-floor", vf_flags.chi2_floor, "chi-square p-value floor");
    vf->add_option("--atom-window", vf_flags.atom_window, "atom probability window");
    vf->add_option("--mle-window", vf_flags.mle_window, "MLE rate window");
    vf->add_option("--mean-window", vf_flags.mean_window, "relative mean window");
    vf->add_option("--residual-mean-window", vf_flags.residual_mean_window,
                   "relative residual-mean window");
    vf->add_option("--lognormal-tv", vf_flags.lognormal_tv, "lognormal TV threshold");
    vf->add_option("--variance-n", vf_flags.variance_n, "variance-arbitration replications");

    PlotFlags plot_flags;
    auto* plot = app.add_subcommand("plotdata", "bin a CSV column into histogram/cdf files");
    plot->add_option("--source", plot_flags.source, "input CSV file")->required();
    plot->add_option("--column", plot_flags.column, "column name to bin")->required();
    plot->add_option("--bins", plot_flags.bins, "number of uniform bins");
    plot->add_flag("--integer", plot_flags.integer_bins, "integer-aligned unit bins");
    plot->add_option("--min", plot_flags.min, "histogram lower edge");
    plot->add_option("--max", plot_flags.max, "histogram upper edge");
    plot->add_option("--out", plot_flags.out_prefix, "output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(sim)) return cmd_simulate(sim_flags);
        if (app.got_subcommand(an)) return cmd_analytic(an_flags);
        if (app.got_subcommand(vf)) return cmd_verify(vf_flags);
        if (app.got_subcommand(plot)) return cmd_plotdata(plot_flags);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}
