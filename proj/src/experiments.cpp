// SPDX-License-Identifier: Apache-2.0
#include "rcc/experiments.hpp"

#include "rcc/linalg.hpp"
#include "rcc/radar.hpp"
#include "rcc/secrecy.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef RCC_VERSION
#define RCC_VERSION "0.0.0"
#endif

namespace rcc
{

namespace fs = std::filesystem;

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kThetaPoints = 360;

double elapsed(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string exact(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string join(const std::vector<std::string>& fields)
{
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i)
    {
        if (i > 0)
            out += ',';
        out += fields[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line)
    {
        if (c == ',')
        {
            out.push_back(cur);
            cur.clear();
        }
        else
        {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Free text inside a CSV field: no separators, no line breaks.
std::string sanitize(std::string text)
{
    for (char& c : text)
    {
        if (c == ',')
            c = ';';
        else if (c == '\n' || c == '\r')
            c = ' ';
    }
    return text;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try
    {
        v = std::stod(t, &used);
    }
    catch (const std::exception&)
    {
        used = 0;
    }
    if (used == 0 || used != t.size() || !std::isfinite(v))
        throw std::invalid_argument("config: " + key + " expects a finite number, got '" + text + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    std::size_t used = 0;
    long long v = 0;
    try
    {
        v = std::stoll(t, &used);
    }
    catch (const std::exception&)
    {
        used = 0;
    }
    if (used == 0 || used != t.size())
        throw std::invalid_argument("config: " + key + " expects an integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "yes" || t == "on" || t == "1")
        return true;
    if (t == "false" || t == "no" || t == "off" || t == "0")
        return false;
    throw std::invalid_argument("config: " + key + " expects true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, std::string text)
{
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::vector<double> out;
    std::string item;
    while (in >> item)
        out.push_back(parse_double(key, item));
    if (out.empty())
        throw std::invalid_argument("config: " + key + " is an empty list");
    return out;
}

std::string list_text(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? " " : "") + exact(v[i]);
    return out;
}

bool same(double a, double b)
{
    return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b));
}

// ---------------------------------------------------------------------------
// Resumable batches
// ---------------------------------------------------------------------------

struct TaskOutput
{
    std::vector<std::string> rows;
    std::vector<std::string> timing;
};

struct Batch
{
    std::string id;       // experiment id in the header
    std::string stem;     // file name stem
    std::string columns;  // CSV column line
    std::string timing_columns;
    int tasks = 0;
    std::function<TaskOutput(int)> run;
    // rows a finished task writes, read off its first row
    std::function<std::size_t(const std::vector<std::string>&)> rows_expected;
};

std::string header_line(const ExperimentConfig& cfg, const std::string& id)
{
    return "# rcc " + code_version() + " experiment=" + id + " config_digest=" + digest(cfg.canonical());
}

std::vector<std::string> read_lines(const fs::path& path, bool drop_partial)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size())
    {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos)
        {
            if (!drop_partial)
                lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

// Keeps the longest prefix of complete task blocks; returns the number of tasks it holds.
int resume_prefix(const fs::path& path, const std::string& header, const Batch& batch)
{
    const std::vector<std::string> lines = read_lines(path, true);
    if (lines.size() < 2 || lines[0] != header || lines[1] != batch.columns)
        throw std::runtime_error("resume: " + path.string() +
                                 " was written by a different configuration or version; remove it or pick another --out");
    std::vector<std::string> kept = {lines[0], lines[1]};
    int task = 0;
    std::size_t i = 2;
    while (i < lines.size() && task < batch.tasks)
    {
        const auto first = split(lines[i]);
        if (first.empty() || first[0] != std::to_string(task))
            break;
        const std::size_t want = batch.rows_expected(first);
        if (i + want > lines.size())
            break;
        bool whole = true;
        for (std::size_t k = 0; k < want; ++k)
            whole = whole && split(lines[i + k])[0] == first[0];
        if (!whole)
            break;
        kept.insert(kept.end(), lines.begin() + static_cast<std::ptrdiff_t>(i),
                    lines.begin() + static_cast<std::ptrdiff_t>(i + want));
        i += want;
        ++task;
    }
    // rewrite even when every block was whole: a torn last line may follow
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        for (const auto& l : kept)
            out << l << '\n';
    }
    fs::rename(tmp, path);
    return task;
}

struct BatchOutcome
{
    fs::path csv;
    int resumed = 0;
    int run = 0;
    bool complete = false;
};

BatchOutcome run_batch(const ExperimentConfig& cfg, const Batch& batch)
{
    fs::create_directories(cfg.out_dir);
    BatchOutcome res;
    res.csv = fs::path(cfg.out_dir) / (batch.stem + ".csv");
    const fs::path timing = fs::path(cfg.out_dir) / (batch.stem + "_timing.csv");
    const std::string header = header_line(cfg, batch.id);

    const bool resuming = fs::exists(res.csv);
    if (resuming)
        res.resumed = resume_prefix(res.csv, header, batch);
    std::ofstream csv(res.csv, std::ios::binary | (resuming ? std::ios::app : std::ios::trunc));
    if (!csv)
        throw std::runtime_error("cannot write " + res.csv.string());
    if (!resuming)
        csv << header << '\n' << batch.columns << '\n' << std::flush;

    const bool timing_fresh = !resuming || !fs::exists(timing);
    std::ofstream tcsv(timing, std::ios::binary | (timing_fresh ? std::ios::trunc : std::ios::app));
    if (timing_fresh)
        tcsv << header << '\n' << batch.timing_columns << '\n';

    const int first = res.resumed;
    int last = batch.tasks;
    if (cfg.stop_after >= 0)
        last = std::min(last, first + cfg.stop_after);

    std::mutex mtx;
    std::condition_variable cv;
    std::map<int, TaskOutput> done;
    std::exception_ptr error;
    std::atomic<int> next{first};
    auto worker = [&] {
        for (;;)
        {
            {
                std::lock_guard lock(mtx);
                if (error)
                    return;
            }
            const int k = next++;
            if (k >= last)
                return;
            TaskOutput out;
            try
            {
                out = batch.run(k);
            }
            catch (...)
            {
                std::lock_guard lock(mtx);
                if (!error)
                    error = std::current_exception();
                cv.notify_all();
                return;
            }
            std::lock_guard lock(mtx);
            done.emplace(k, std::move(out));
            cv.notify_all();
        }
    };

    const int workers = std::max(1, std::min(cfg.jobs, last - first));
    std::vector<std::thread> pool;
    if (cfg.jobs > 1)
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);

    const auto t0 = std::chrono::steady_clock::now();
    for (int k = first; k < last; ++k)
    {
        TaskOutput out;
        if (pool.empty())
        {
            out = batch.run(k);
        }
        else
        {
            std::unique_lock lock(mtx);
            cv.wait(lock, [&] { return done.count(k) > 0 || error; });
            if (done.count(k) == 0)
                break;
            out = std::move(done.at(k));
            done.erase(k);
        }
        for (const auto& r : out.rows)
            csv << r << '\n';
        csv.flush();
        for (const auto& r : out.timing)
            tcsv << r << '\n';
        tcsv.flush();
        ++res.run;
        if (!cfg.quiet)
            std::cerr << "[" << batch.id << "] task " << (k + 1) << "/" << batch.tasks << "  " << std::fixed
                      << std::setprecision(1) << elapsed(t0) << " s\n"
                      << std::defaultfloat;
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
    res.complete = first + res.run == batch.tasks;
    return res;
}

struct Table
{
    std::map<std::string, std::size_t> col;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] const std::string& at(const std::vector<std::string>& r, const std::string& name) const
    {
        return r.at(col.at(name));
    }
    [[nodiscard]] double number(const std::vector<std::string>& r, const std::string& name) const
    {
        const std::string& f = at(r, name);
        return f.empty() ? kNaN : std::stod(f);
    }
};

Table read_table(const fs::path& path)
{
    Table t;
    bool have_columns = false;
    for (const auto& line : read_lines(path, true))
    {
        if (line.empty() || line[0] == '#')
            continue;
        auto fields = split(line);
        if (!have_columns)
        {
            for (std::size_t i = 0; i < fields.size(); ++i)
                t.col[fields[i]] = i;
            have_columns = true;
            continue;
        }
        t.rows.push_back(std::move(fields));
    }
    return t;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
}

nlohmann::json finite_or_null(double x)
{
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

nlohmann::json summary_head(const ExperimentConfig& cfg, const std::string& id, const BatchOutcome& b, int tasks)
{
    return {{"experiment", id},
            {"version", code_version()},
            {"config_digest", digest(cfg.canonical())},
            {"config", cfg.canonical()},
            {"csv", b.csv.filename().string()},
            {"tasks", tasks},
            {"complete", b.complete}};
}

ExperimentResult finish(const ExperimentConfig& cfg, const std::string& stem, const BatchOutcome& b, int tasks,
                        nlohmann::json summary)
{
    ExperimentResult r;
    r.csv_path = b.csv.string();
    r.summary_path = (fs::path(cfg.out_dir) / (stem + "_summary.json")).string();
    r.summary = std::move(summary);
    r.tasks_total = tasks;
    r.tasks_resumed = b.resumed;
    r.tasks_run = b.run;
    r.complete = b.complete;
    write_json(r.summary_path, r.summary);
    return r;
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

std::string scenario_digest(const Scenario& s)
{
    std::ostringstream os;
    os << std::setprecision(17) << s.n_bs << ';' << s.m_radar << ';' << s.p_c << ';' << s.p_r << ';' << s.eps_hb << ';'
       << s.eps_he << ';' << s.eps_fb << ';' << s.eps_fe << ';' << s.eps_gm << ';' << s.gamma_p << ';'
       << s.gamma_inr.sum() << ';';
    auto put = [&](const CVector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i)
            os << v(i).real() << ',' << v(i).imag() << ';';
    };
    put(s.h_bar_b);
    put(s.h_bar_e);
    put(s.f_bar_b);
    put(s.f_bar_e);
    for (const auto& g : s.g_bar)
        put(g);
    return digest(os.str());
}

CMatrix ideal_covariance(const ScenarioTemplate& tpl)
{
    return design_ideal_covariance(mainlobe_mask(tpl.mainlobe_lo, tpl.mainlobe_hi), tpl.p_r, tpl.m_radar)
        .r_d.matrix();
}

struct DesignRun
{
    DesignSolution design;
    TrialMetrics metrics;
    std::string note;
};

DesignRun design_and_evaluate(const Scenario& truth, const Scenario& designed_for, const CMatrix& r_d,
                              const ExperimentConfig& cfg, std::uint64_t seed)
{
    DesignRun run;
    const auto t0 = std::chrono::steady_clock::now();
    try
    {
        run.design = run_design(designed_for, r_d, cfg.design);
        run.metrics = evaluate_design(truth, designed_for, run.design, r_d, cfg, seed);
        run.note = run.design.diagnostic;
    }
    catch (const std::exception& e)
    {
        run.metrics = {};
        run.metrics.status = "failed";
        run.note = e.what();
    }
    run.metrics.seconds = elapsed(t0);
    return run;
}

const std::vector<std::string> kMetricColumns = {"status",  "certified", "mu",        "eta",        "worst_case_rate",
                                                 "nominal_rate", "p_d",   "inr_margin_db", "mismatch", "rank_ratio",
                                                 "secrecy_bound", "rank_one_bound", "sdr_ratio"};

std::vector<std::string> metric_fields(const TrialMetrics& m)
{
    if (!m.solved)
    {
        std::vector<std::string> f(kMetricColumns.size());
        f[0] = m.status;
        f[1] = "0";
        return f;
    }
    return {m.status,
            m.certified ? "1" : "0",
            num(m.mu_star),
            num(m.eta_star),
            num(m.worst_case_rate),
            num(m.nominal_rate),
            num(m.p_d),
            num(m.inr_margin_db),
            num(m.mismatch),
            num(m.rank_ratio),
            num(m.secrecy_bound),
            num(m.rank_one_bound),
            num(m.sdr_ratio)};
}

std::string timing_row(int task, const std::string& design, const DesignRun& r)
{
    return join({std::to_string(task), design, num(r.metrics.seconds), std::to_string(r.design.inner_solves),
                 std::to_string(r.design.pruned)});
}

const char* kTimingColumns = "task,design,seconds,inner_solves,pruned";

bool usable(const Table& t, const std::vector<std::string>& r)
{
    return t.at(r, "status") == "optimal" && t.at(r, "certified") == "1";
}

double mean(const std::vector<double>& v)
{
    return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v)
{
    if (v.size() < 2)
        return kNaN;
    const double m = mean(v);
    double ss = 0.0;
    for (const double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::uint64_t oracle_seed(const ExperimentConfig& cfg, int task)
{
    return derive_seed(cfg.seed ^ 0x6f7261636c65ULL, static_cast<std::uint64_t>(task));
}

double margin_db(double ratio)
{
    return ratio > 0.0 ? std::max(-300.0, 10.0 * std::log10(ratio)) : -300.0;
}

}  // namespace

std::string code_version()
{
    return RCC_VERSION;
}

std::string to_string(ExperimentKind k)
{
    switch (k)
    {
    case ExperimentKind::beampattern:
        return "beampattern";
    case ExperimentKind::secrecy_vs_power:
        return "secrecy-vs-power";
    case ExperimentKind::secrecy_vs_detection:
        return "secrecy-vs-detection";
    case ExperimentKind::single:
        return "single-solve";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const
{
    scenario.validate();
    auto require = [](bool ok, const std::string& msg) {
        if (!ok)
            throw std::invalid_argument("config: " + msg);
    };
    require(trials >= 1, "trials must be >= 1");
    require(jobs >= 1, "jobs must be >= 1");
    require(!out_dir.empty(), "out must name a directory");
    auto check_list = [&](const std::vector<double>& v, const std::string& name, double lo) {
        require(!v.empty(), name + " is empty");
        for (const double x : v)
            require(std::isfinite(x) && x >= lo, name + " values must be finite and >= " + num(lo));
    };
    check_list(gamma_p_ratios, "gamma_p_ratios", 0.0);
    check_list(pc_dbm, "pc_dbm", -std::numeric_limits<double>::max());
    check_list(eps2_values, "eps2_values", 0.0);
    check_list(gamma_inr_db, "gamma_inr_db", -std::numeric_limits<double>::max());
    check_list(tradeoff_gamma_p_ratios, "tradeoff_gamma_p_ratios", 0.0);
    require(std::isfinite(power_sweep_eps2) && power_sweep_eps2 >= 0.0, "power_sweep_eps2 must be >= 0");
    require(std::isfinite(eps2_sweep_pc_dbm), "eps2_sweep_pc_dbm must be finite");
    require(design.coarse_points >= 1, "coarse_points must be >= 1");
    require(design.refinement >= 0, "refinement must be >= 0");
    require(design.extraction.candidates >= 0, "candidates must be >= 0");
    require(design.extraction.rank_threshold >= 0.0, "rank_threshold must be >= 0");
    require(oracle_budget >= 1, "oracle_budget must be >= 1");
    require(falsifier_samples >= 1, "falsifier_samples must be >= 1");
}

std::string ExperimentConfig::canonical() const
{
    std::ostringstream os;
    os << "kind=" << to_string(kind) << ";trials=" << trials << ";seed=" << seed << ";" << scenario.canonical()
       << ";gamma_p_ratios=" << list_text(gamma_p_ratios) << ";pc_dbm=" << list_text(pc_dbm)
       << ";power_sweep_eps2=" << exact(power_sweep_eps2) << ";eps2_values=" << list_text(eps2_values)
       << ";eps2_sweep_pc_dbm=" << exact(eps2_sweep_pc_dbm) << ";gamma_inr_db=" << list_text(gamma_inr_db)
       << ";tradeoff_gamma_p_ratios=" << list_text(tradeoff_gamma_p_ratios)
       << ";coarse_points=" << design.coarse_points << ";refinement=" << design.refinement
       << ";prune=" << design.prune << ";candidates=" << design.extraction.candidates
       << ";rank_threshold=" << exact(design.extraction.rank_threshold)
       << ";extraction_seed=" << design.extraction.seed << ";oracle_budget=" << oracle_budget
       << ";falsifier_samples=" << falsifier_samples;
    return os.str();
}

ExperimentConfig parse_experiment_config(std::istream& in)
{
    std::stringstream copy;
    copy << in.rdbuf();
    const auto sections = read_config_sections(copy);
    copy.clear();
    copy.seekg(0);

    ExperimentConfig cfg;
    cfg.scenario = parse_scenario_template(copy);
    for (const auto& [name, keys] : sections)
    {
        if (name != "scenario" && name != "experiment")
            throw std::invalid_argument("config: unknown section [" + name + "]");
    }
    if (const auto it = sections.find("experiment"); it != sections.end())
    {
        for (const auto& [key, value] : it->second)
        {
            if (key == "trials")
                cfg.trials = static_cast<int>(parse_int(key, value));
            else if (key == "seed")
                cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
            else if (key == "jobs")
                cfg.jobs = static_cast<int>(parse_int(key, value));
            else if (key == "out")
                cfg.out_dir = trim(value);
            else if (key == "gamma_p_ratios")
                cfg.gamma_p_ratios = parse_list(key, value);
            else if (key == "pc_dbm")
                cfg.pc_dbm = parse_list(key, value);
            else if (key == "power_sweep_eps2")
                cfg.power_sweep_eps2 = parse_double(key, value);
            else if (key == "eps2_values")
                cfg.eps2_values = parse_list(key, value);
            else if (key == "eps2_sweep_pc_dbm")
                cfg.eps2_sweep_pc_dbm = parse_double(key, value);
            else if (key == "gamma_inr_db")
                cfg.gamma_inr_db = parse_list(key, value);
            else if (key == "tradeoff_gamma_p_ratios")
                cfg.tradeoff_gamma_p_ratios = parse_list(key, value);
            else if (key == "coarse_points")
                cfg.design.coarse_points = static_cast<int>(parse_int(key, value));
            else if (key == "refinement")
                cfg.design.refinement = static_cast<int>(parse_int(key, value));
            else if (key == "prune")
                cfg.design.prune = parse_bool(key, value);
            else if (key == "candidates")
                cfg.design.extraction.candidates = static_cast<int>(parse_int(key, value));
            else if (key == "rank_threshold")
                cfg.design.extraction.rank_threshold = parse_double(key, value);
            else if (key == "oracle_budget")
                cfg.oracle_budget = static_cast<int>(parse_int(key, value));
            else if (key == "falsifier_samples")
                cfg.falsifier_samples = static_cast<int>(parse_int(key, value));
            else
                throw std::invalid_argument("config: unknown key '" + key + "' in [experiment]");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open " + path);
    return parse_experiment_config(in);
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

FalsifierReport falsify(const Scenario& s, const CMatrix& t, const CMatrix& r_x, double eta_floor, double mu_cap,
                        int samples, std::uint64_t seed)
{
    if (samples < 1)
        throw std::invalid_argument("falsify: samples must be >= 1");
    FalsifierReport rep;
    rep.samples = samples;
    std::mt19937_64 rng(seed);
    auto mode = [](int i) { return i % 2 == 0 ? BallMode::boundary : BallMode::interior; };

    rep.bob_min_sinr = kInf;
    for (int i = 0; i < samples; ++i)
    {
        const CVector h = sample_error_ball(s.h_bar_b, s.eps_hb, mode(i), rng);
        const CVector f = sample_error_ball(s.f_bar_b, s.eps_fb, mode(i), rng);
        rep.bob_min_sinr = std::min(rep.bob_min_sinr, sinr_bob(h, f, t, r_x, s.sigma_b2));
    }
    rep.eve_max_sinr = 0.0;
    for (int i = 0; i < samples; ++i)
    {
        const CVector h = sample_error_ball(s.h_bar_e, s.eps_he, mode(i), rng);
        const CVector f = sample_error_ball(s.f_bar_e, s.eps_fe, mode(i), rng);
        rep.eve_max_sinr = std::max(rep.eve_max_sinr, sinr_eve(h, f, t, r_x, s.sigma_e2));
    }
    rep.inr_max_ratio = 0.0;
    for (int m = 0; m < s.m_radar; ++m)
    {
        const CVector& g = s.g_bar[static_cast<std::size_t>(m)];
        for (int i = 0; i < samples; ++i)
        {
            const CVector gs = sample_error_ball(g, s.eps_gm, mode(i), rng);
            rep.inr_max_ratio = std::max(rep.inr_max_ratio, inr_per_antenna(gs, t, s.sigma_r2) / s.gamma_inr(m));
        }
    }
    rep.bob_ok = !std::isfinite(eta_floor) || rep.bob_min_sinr >= eta_floor - 1e-6;
    rep.eve_ok = !std::isfinite(mu_cap) || rep.eve_max_sinr <= mu_cap + 1e-6;
    rep.inr_ok = rep.inr_max_ratio <= 1.0 + 1e-6;
    return rep;
}

TrialMetrics evaluate_design(const Scenario& truth, const Scenario& designed_for, const DesignSolution& d,
                             const CMatrix& r_d, const ExperimentConfig& cfg, std::uint64_t seed)
{
    TrialMetrics m;
    m.status = to_string(d.status);
    m.seconds = d.seconds;
    if (d.status != DesignStatus::optimal)
        return m;
    m.solved = true;
    m.mu_star = d.mu_star;
    m.eta_star = d.eta_star;
    m.rank_ratio = d.rank_ratio;

    const CMatrix tt = d.t * d.t.adjoint();
    const CMatrix& r = d.R_x.matrix();
    OracleOptions oo;
    oo.budget = cfg.oracle_budget;
    oo.seed = seed;
    const SecrecyReport wc = worst_case_secrecy(truth, tt, r, oo);
    m.worst_case_difference = wc.difference;
    m.worst_case_rate = wc.secrecy_rate;
    m.nominal_rate = secrecy_rate(nominal_realization(truth), tt, r, truth).secrecy_rate;
    m.p_d = mainlobe_detection_probability(truth, tt, r);
    double worst_inr = 0.0;
    for (int k = 0; k < truth.m_radar; ++k)
    {
        const CVector gc = truth.g_bar[static_cast<std::size_t>(k)].conjugate();
        const double inr = max_quadratic_on_ball(tt, gc, truth.eps_gm).value / truth.sigma_r2;
        worst_inr = std::max(worst_inr, inr / truth.gamma_inr(k));
    }
    m.inr_margin_db = margin_db(worst_inr);
    m.mismatch = (r - r_d).norm();
    m.secrecy_bound = d.secrecy_bound();
    m.rank_one_bound = std::log2(d.rank_one_objective);
    m.sdr_ratio = m.secrecy_bound > 1e-12 ? m.worst_case_rate / m.secrecy_bound : 1.0;
    m.certified = falsify(designed_for, tt, r, -kInf, d.mu_star, cfg.falsifier_samples, seed ^ 0xfa15ULL).passed();
    return m;
}

// ---------------------------------------------------------------------------
// Beampattern
// ---------------------------------------------------------------------------

ExperimentResult run_beampattern_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const CMatrix r_d = ideal_covariance(cfg.scenario);
    const int per_curve = cfg.trials;
    const int tasks = 1 + static_cast<int>(cfg.gamma_p_ratios.size()) * per_curve;

    Batch b;
    b.id = "beampattern";
    b.stem = "beampattern";
    b.columns = "task,curve,gamma_p_ratio,trial,seed,scenario_digest,status,certified,mismatch,theta_deg,gain,gain_db,note";
    b.timing_columns = kTimingColumns;
    b.tasks = tasks;
    b.rows_expected = [](const std::vector<std::string>& f) -> std::size_t {
        return f.size() > 6 && (f[6] == "optimal" || f[6] == "reference") ? kThetaPoints : 1;
    };
    b.run = [&](int task) {
        TaskOutput out;
        auto curve_rows = [&](const std::vector<std::string>& lead, const CMatrix& r, double mismatch) {
            for (int th = 0; th < kThetaPoints; ++th)
            {
                const double gain = beampattern(r, th);
                auto f = lead;
                f.insert(f.end(), {num(mismatch), std::to_string(th), num(gain),
                                   num(10.0 * std::log10(std::max(gain, 1e-300))), ""});
                out.rows.push_back(join(f));
            }
        };
        if (task == 0)
        {
            curve_rows({"0", "reference", "", "", "", "", "reference", "1"}, r_d, 0.0);
            return out;
        }
        const int idx = task - 1;
        const double ratio = cfg.gamma_p_ratios[static_cast<std::size_t>(idx / per_curve)];
        const int trial = idx % per_curve;
        ScenarioTemplate tpl = cfg.scenario;
        tpl.gamma_p_ratio = ratio;
        const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
        const Scenario s = sample_scenario(seed, tpl);
        const DesignRun run = design_and_evaluate(s, s, r_d, cfg, oracle_seed(cfg, task));
        const std::vector<std::string> lead = {std::to_string(task), "designed", num(ratio), std::to_string(trial),
                                               std::to_string(seed), scenario_digest(s), run.metrics.status,
                                               run.metrics.certified ? "1" : "0"};
        if (run.metrics.status == "optimal")
        {
            curve_rows(lead, run.design.R_x.matrix(), run.metrics.mismatch);
        }
        else
        {
            auto f = lead;
            f.insert(f.end(), {"", "", "", "", sanitize(run.note)});
            out.rows.push_back(join(f));
        }
        out.timing.push_back(timing_row(task, "robust", run));
        return out;
    };
    const BatchOutcome bo = run_batch(cfg, b);

    const Table t = read_table(bo.csv);
    auto lobes = [&](const std::vector<double>& gains) {
        double main = 0.0, side = 0.0;
        int nm = 0, ns = 0;
        for (int th = 0; th < kThetaPoints; ++th)
        {
            if (in_mainlobe(th, cfg.scenario.mainlobe_lo, cfg.scenario.mainlobe_hi))
            {
                main += gains[static_cast<std::size_t>(th)];
                ++nm;
            }
            else
            {
                side += gains[static_cast<std::size_t>(th)];
                ++ns;
            }
        }
        return std::pair{nm ? main / nm : kNaN, ns ? side / ns : kNaN};
    };
    auto to_db = [](double x) { return x > 0.0 ? 10.0 * std::log10(x) : kNaN; };

    std::vector<double> ref(kThetaPoints, 0.0);
    std::map<double, std::vector<double>> sums;
    std::map<double, int> designs, excluded;
    std::map<double, std::vector<double>> mismatches;
    for (const auto& r : t.rows)
    {
        if (t.at(r, "curve") == "reference")
        {
            ref[static_cast<std::size_t>(std::stoi(t.at(r, "theta_deg")))] = t.number(r, "gain");
            continue;
        }
        const double ratio = t.number(r, "gamma_p_ratio");
        const bool first = t.at(r, "theta_deg").empty() || t.at(r, "theta_deg") == "0";
        if (!usable(t, r))
        {
            if (first)
                ++excluded[ratio];
            continue;
        }
        auto& acc = sums[ratio];
        acc.resize(kThetaPoints, 0.0);
        acc[static_cast<std::size_t>(std::stoi(t.at(r, "theta_deg")))] += t.number(r, "gain");
        if (first)
        {
            ++designs[ratio];
            mismatches[ratio].push_back(t.number(r, "mismatch"));
        }
    }

    nlohmann::json j = summary_head(cfg, b.id, bo, tasks);
    const auto [ref_main, ref_side] = lobes(ref);
    const double rd_norm = r_d.norm();
    j["reference"] = {{"mainlobe_avg", ref_main},
                      {"sidelobe_avg", ref_side},
                      {"mainlobe_db", finite_or_null(to_db(ref_main))},
                      {"sidelobe_db", finite_or_null(to_db(ref_side))},
                      {"frobenius_norm", rd_norm}};
    nlohmann::json curves = nlohmann::json::array();
    std::vector<double> ratios = cfg.gamma_p_ratios;
    std::sort(ratios.begin(), ratios.end());
    std::vector<double> mains, sides;
    for (const double ratio : ratios)
    {
        nlohmann::json c = {{"gamma_p_ratio", ratio}, {"designs", designs[ratio]}, {"excluded", excluded[ratio]}};
        if (designs[ratio] > 0)
        {
            std::vector<double> avg = sums[ratio];
            for (double& g : avg)
                g /= designs[ratio];
            const auto [mn, sd] = lobes(avg);
            mains.push_back(mn);
            sides.push_back(sd);
            const double mm = mean(mismatches[ratio]);
            c["mainlobe_avg"] = mn;
            c["sidelobe_avg"] = sd;
            c["mainlobe_db"] = finite_or_null(to_db(mn));
            c["sidelobe_db"] = finite_or_null(to_db(sd));
            c["mainlobe_gap_db"] = finite_or_null(to_db(mn) - to_db(ref_main));
            c["within_1db_of_reference"] = std::abs(to_db(mn) - to_db(ref_main)) <= 1.0;
            c["mean_mismatch"] = mm;
            c["mean_relative_mismatch"] = mm / rd_norm;
        }
        else
        {
            mains.push_back(kNaN);
            sides.push_back(kNaN);
        }
        curves.push_back(c);
    }
    j["curves"] = curves;
    bool main_ok = true, side_ok = true;
    for (std::size_t i = 0; i < mains.size(); ++i)
    {
        main_ok = main_ok && std::isfinite(mains[i]);
        side_ok = side_ok && std::isfinite(sides[i]);
        if (i > 0)
        {
            main_ok = main_ok && mains[i] <= mains[i - 1] * (1.0 + 1e-9);
            side_ok = side_ok && sides[i] >= sides[i - 1] * (1.0 - 1e-9);
        }
    }
    j["trends"] = {{"mainlobe_nonincreasing", main_ok}, {"sidelobe_nondecreasing", side_ok}};
    return finish(cfg, b.stem, bo, tasks, j);
}

// ---------------------------------------------------------------------------
// Secrecy vs BS power
// ---------------------------------------------------------------------------

namespace
{

struct Cell
{
    double pc_dbm = 0.0;
    double eps2 = 0.0;
    bool power_sweep = false;
    bool eps2_sweep = false;
};

std::vector<Cell> secrecy_cells(const ExperimentConfig& cfg)
{
    std::vector<Cell> cells;
    auto add = [&](double pc, double e, bool power) {
        for (Cell& c : cells)
        {
            if (same(c.pc_dbm, pc) && same(c.eps2, e))
            {
                (power ? c.power_sweep : c.eps2_sweep) = true;
                return;
            }
        }
        cells.push_back({pc, e, power, !power});
    };
    for (const double pc : cfg.pc_dbm)
        add(pc, cfg.power_sweep_eps2, true);
    for (const double e : cfg.eps2_values)
        add(cfg.eps2_sweep_pc_dbm, e, false);
    return cells;
}

ScenarioTemplate with_radii(ScenarioTemplate tpl, double eps2)
{
    tpl.eps2_hb = tpl.eps2_he = tpl.eps2_fb = tpl.eps2_fe = tpl.eps2_gm = eps2;
    return tpl;
}

nlohmann::json design_stats(const Table& t, const std::vector<const std::vector<std::string>*>& rows)
{
    std::vector<double> wc, nom, pd;
    int excluded = 0;
    int inr_violations = 0;  // worst-case INR above the cap under the true radii
    for (const auto* r : rows)
    {
        if (t.at(*r, "status") == "optimal" && t.number(*r, "inr_margin_db") > 1e-6)
            ++inr_violations;
        if (!usable(t, *r))
        {
            ++excluded;
            continue;
        }
        wc.push_back(t.number(*r, "worst_case_rate"));
        nom.push_back(t.number(*r, "nominal_rate"));
        pd.push_back(t.number(*r, "p_d"));
    }
    return {{"trials", wc.size()},
            {"excluded", excluded},
            {"inr_violations", inr_violations},
            {"mean_worst_case_rate", finite_or_null(mean(wc))},
            {"stderr_worst_case_rate", finite_or_null(std_error(wc))},
            {"mean_nominal_rate", finite_or_null(mean(nom))},
            {"mean_p_d", finite_or_null(mean(pd))}};
}

}  // namespace

ExperimentResult run_secrecy_vs_power(const ExperimentConfig& cfg)
{
    cfg.validate();
    const CMatrix r_d = ideal_covariance(cfg.scenario);
    const std::vector<Cell> cells = secrecy_cells(cfg);
    const int tasks = static_cast<int>(cells.size()) * cfg.trials;

    Batch b;
    b.id = "secrecy-vs-power";
    b.stem = "secrecy_power";
    std::vector<std::string> cols = {"task", "cell", "pc_dbm", "eps2", "trial", "seed", "scenario_digest", "design"};
    cols.insert(cols.end(), kMetricColumns.begin(), kMetricColumns.end());
    cols.insert(cols.end(), {"fp_baseline", "note"});
    b.columns = join(cols);
    b.timing_columns = kTimingColumns;
    b.tasks = tasks;
    b.rows_expected = [](const std::vector<std::string>&) -> std::size_t { return 2; };
    b.run = [&](int task) {
        TaskOutput out;
        const int ci = task / cfg.trials;
        const int trial = task % cfg.trials;
        const Cell& cell = cells[static_cast<std::size_t>(ci)];
        ScenarioTemplate tpl = with_radii(cfg.scenario, cell.eps2);
        tpl.p_c = dbm_to_watt(cell.pc_dbm);
        const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
        const Scenario truth = sample_scenario(seed, tpl);
        const Scenario nominal = with_zero_radii(truth);
        const std::string dg = scenario_digest(truth);
        const std::uint64_t os = oracle_seed(cfg, task);
        for (const bool robust : {true, false})
        {
            const DesignRun run = design_and_evaluate(truth, robust ? truth : nominal, r_d, cfg, os);
            std::vector<std::string> f = {std::to_string(task), std::to_string(ci),      num(cell.pc_dbm),
                                          num(cell.eps2),       std::to_string(trial),   std::to_string(seed),
                                          dg,                   robust ? "robust" : "non-robust"};
            const auto mf = metric_fields(run.metrics);
            f.insert(f.end(), mf.begin(), mf.end());
            f.insert(f.end(), {"", sanitize(run.note)});
            out.rows.push_back(join(f));
            out.timing.push_back(timing_row(task, robust ? "robust" : "non-robust", run));
        }
        return out;
    };
    const BatchOutcome bo = run_batch(cfg, b);

    const Table t = read_table(bo.csv);
    nlohmann::json j = summary_head(cfg, b.id, bo, tasks);
    nlohmann::json jc = nlohmann::json::array();
    bool robust_wins = true;
    std::vector<std::pair<double, double>> eps_curve;
    double zero_radius_gap = kNaN;
    for (std::size_t ci = 0; ci < cells.size(); ++ci)
    {
        std::vector<const std::vector<std::string>*> rob, non;
        std::map<std::string, std::pair<double, double>> by_trial;  // robust, non-robust worst-case rate
        for (const auto& r : t.rows)
        {
            if (t.at(r, "cell") != std::to_string(ci))
                continue;
            const bool is_robust = t.at(r, "design") == "robust";
            (is_robust ? rob : non).push_back(&r);
            if (usable(t, r))
            {
                auto& p = by_trial.try_emplace(t.at(r, "trial"), kNaN, kNaN).first->second;
                (is_robust ? p.first : p.second) = t.number(r, "worst_case_rate");
            }
        }
        const Cell& c = cells[ci];
        nlohmann::json e = {{"pc_dbm", c.pc_dbm},
                            {"eps2", c.eps2},
                            {"power_sweep", c.power_sweep},
                            {"eps2_sweep", c.eps2_sweep},
                            {"robust", design_stats(t, rob)},
                            {"non_robust", design_stats(t, non)}};
        const auto rm = e["robust"]["mean_worst_case_rate"];
        const auto nm = e["non_robust"]["mean_worst_case_rate"];
        const bool have = rm.is_number() && nm.is_number();
        e["robust_exceeds_non_robust"] = have && rm.get<double>() > nm.get<double>();
        double gap = 0.0;
        int paired = 0;
        for (const auto& [trial, p] : by_trial)
        {
            if (std::isfinite(p.first) && std::isfinite(p.second))
            {
                gap = std::max(gap, std::abs(p.first - p.second));
                ++paired;
            }
        }
        e["max_paired_gap"] = paired ? nlohmann::json(gap) : nlohmann::json(nullptr);
        if (c.power_sweep)
            robust_wins = robust_wins && e["robust_exceeds_non_robust"].get<bool>();
        if (c.eps2_sweep)
        {
            eps_curve.emplace_back(c.eps2, have ? rm.get<double>() : kNaN);
            if (c.eps2 == 0.0 && paired)
                zero_radius_gap = gap;
        }
        jc.push_back(e);
    }
    j["cells"] = jc;
    std::sort(eps_curve.begin(), eps_curve.end());
    bool eps_ok = !eps_curve.empty();
    for (std::size_t i = 0; i < eps_curve.size(); ++i)
    {
        eps_ok = eps_ok && std::isfinite(eps_curve[i].second);
        if (i > 0)
            eps_ok = eps_ok && eps_curve[i].second <= eps_curve[i - 1].second + 1e-9;
    }
    j["trends"] = {{"robust_exceeds_non_robust_every_pc", robust_wins},
                   {"robust_nonincreasing_in_eps2", eps_ok},
                   {"zero_radius_max_gap", finite_or_null(zero_radius_gap)}};
    return finish(cfg, b.stem, bo, tasks, j);
}

// ---------------------------------------------------------------------------
// Secrecy vs detection probability
// ---------------------------------------------------------------------------

double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("spearman: length mismatch");
    const std::size_t n = a.size();
    if (n < 2)
        return kNaN;
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n;)
        {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]])
                ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k)
                r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : kNaN;
}

ExperimentResult run_tradeoff_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const CMatrix r_d = ideal_covariance(cfg.scenario);
    const int points = static_cast<int>(cfg.tradeoff_gamma_p_ratios.size());
    const int curves = static_cast<int>(cfg.gamma_inr_db.size());
    const int tasks = curves * points * cfg.trials;

    Batch b;
    b.id = "secrecy-vs-detection";
    b.stem = "tradeoff";
    std::vector<std::string> cols = {"task",  "curve", "gamma_inr_db", "gamma_p_ratio",
                                     "trial", "seed",  "scenario_digest", "design"};
    cols.insert(cols.end(), kMetricColumns.begin(), kMetricColumns.end());
    cols.push_back("note");
    b.columns = join(cols);
    b.timing_columns = kTimingColumns;
    b.tasks = tasks;
    b.rows_expected = [](const std::vector<std::string>&) -> std::size_t { return 1; };
    b.run = [&](int task) {
        TaskOutput out;
        const int trial = task % cfg.trials;
        const int pi = (task / cfg.trials) % points;
        const int ci = task / (cfg.trials * points);
        ScenarioTemplate tpl = cfg.scenario;
        tpl.gamma_inr = db_to_linear(cfg.gamma_inr_db[static_cast<std::size_t>(ci)]);
        tpl.gamma_p_ratio = cfg.tradeoff_gamma_p_ratios[static_cast<std::size_t>(pi)];
        const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
        const Scenario s = sample_scenario(seed, tpl);
        const DesignRun run = design_and_evaluate(s, s, r_d, cfg, oracle_seed(cfg, task));
        std::vector<std::string> f = {std::to_string(task),
                                      std::to_string(ci),
                                      num(cfg.gamma_inr_db[static_cast<std::size_t>(ci)]),
                                      num(tpl.gamma_p_ratio),
                                      std::to_string(trial),
                                      std::to_string(seed),
                                      scenario_digest(s),
                                      "robust"};
        const auto mf = metric_fields(run.metrics);
        f.insert(f.end(), mf.begin(), mf.end());
        f.push_back(sanitize(run.note));
        out.rows.push_back(join(f));
        out.timing.push_back(timing_row(task, "robust", run));
        return out;
    };
    const BatchOutcome bo = run_batch(cfg, b);

    const Table t = read_table(bo.csv);
    nlohmann::json j = summary_head(cfg, b.id, bo, tasks);
    struct Curve
    {
        double gamma_db = 0.0;
        std::vector<std::pair<double, double>> pts;  // (mean P_D, mean secrecy) sorted by P_D
    };
    std::vector<Curve> cv;
    nlohmann::json jcurves = nlohmann::json::array();
    bool all_negative = true;
    for (int ci = 0; ci < curves; ++ci)
    {
        Curve c;
        c.gamma_db = cfg.gamma_inr_db[static_cast<std::size_t>(ci)];
        nlohmann::json jp = nlohmann::json::array();
        std::vector<double> pds, rates;
        for (int pi = 0; pi < points; ++pi)
        {
            std::vector<double> pd, rate;
            int excluded = 0;
            for (const auto& r : t.rows)
            {
                const int task = std::stoi(t.at(r, "task"));
                if (task / (cfg.trials * points) != ci || (task / cfg.trials) % points != pi)
                    continue;
                if (!usable(t, r))
                {
                    ++excluded;
                    continue;
                }
                pd.push_back(t.number(r, "p_d"));
                rate.push_back(t.number(r, "worst_case_rate"));
            }
            jp.push_back({{"gamma_p_ratio", cfg.tradeoff_gamma_p_ratios[static_cast<std::size_t>(pi)]},
                          {"trials", pd.size()},
                          {"excluded", excluded},
                          {"mean_p_d", finite_or_null(mean(pd))},
                          {"mean_worst_case_rate", finite_or_null(mean(rate))}});
            if (!pd.empty())
            {
                pds.push_back(mean(pd));
                rates.push_back(mean(rate));
                c.pts.emplace_back(mean(pd), mean(rate));
            }
        }
        std::sort(c.pts.begin(), c.pts.end());
        const double rho = spearman(pds, rates);
        const bool negative = std::isfinite(rho) && rho < 0.0;
        all_negative = all_negative && negative;
        jcurves.push_back({{"gamma_inr_db", c.gamma_db},
                           {"points", jp},
                           {"spearman", finite_or_null(rho)},
                           {"negative_tradeoff", negative}});
        cv.push_back(std::move(c));
    }
    j["curves"] = jcurves;

    // Dominance on the achievable frontier: the best mean secrecy among sweep
    // points meeting a P_D requirement p, compared at every requirement both
    // curves can meet. The raw curves need not be monotone in P_D.
    auto frontier = [](const Curve& c, double p) {
        double best = -kInf;
        for (const auto& [pd, rate] : c.pts)
            if (pd >= p)
                best = std::max(best, rate);
        return best;
    };
    std::sort(cv.begin(), cv.end(), [](const Curve& a, const Curve& b) { return a.gamma_db < b.gamma_db; });
    nlohmann::json jdom = nlohmann::json::array();
    bool dominance = curves > 1;
    for (std::size_t i = 0; i + 1 < cv.size(); ++i)
    {
        const Curve& lo = cv[i];
        const Curve& hi = cv[i + 1];
        nlohmann::json d = {{"lower_gamma_inr_db", lo.gamma_db}, {"higher_gamma_inr_db", hi.gamma_db}};
        const double reach = lo.pts.empty() || hi.pts.empty()
                                 ? -kInf
                                 : std::min(lo.pts.back().first, hi.pts.back().first);
        std::vector<double> at;
        for (const auto* c : {&lo, &hi})
            for (const auto& [pd, rate] : c->pts)
                if (pd <= reach)
                    at.push_back(pd);
        std::sort(at.begin(), at.end());
        at.erase(std::unique(at.begin(), at.end()), at.end());
        double worst = kInf;
        for (const double pd : at)
            worst = std::min(worst, frontier(hi, pd) - frontier(lo, pd));
        d["max_common_p_d"] = finite_or_null(reach);
        d["matched_points"] = at.size();
        d["min_secrecy_gain"] = finite_or_null(worst);
        const bool ok = !at.empty() && worst >= -1e-9;
        d["dominates"] = ok;
        dominance = dominance && ok;
        jdom.push_back(d);
    }
    j["dominance"] = jdom;
    j["trends"] = {{"negative_spearman_every_curve", all_negative}, {"larger_gamma_inr_dominates", dominance}};
    return finish(cfg, b.stem, bo, tasks, j);
}

// ---------------------------------------------------------------------------
// Single solve
// ---------------------------------------------------------------------------

namespace
{

nlohmann::json falsifier_json(const FalsifierReport& f)
{
    return {{"samples_per_ball", f.samples},
            {"bob_min_sinr", finite_or_null(f.bob_min_sinr)},
            {"eve_max_sinr", f.eve_max_sinr},
            {"inr_max_ratio", f.inr_max_ratio},
            {"bob_ok", f.bob_ok},
            {"eve_ok", f.eve_ok},
            {"inr_ok", f.inr_ok},
            {"passed", f.passed()}};
}

nlohmann::json metrics_json(const TrialMetrics& m)
{
    return {{"status", m.status},
            {"certified", m.certified},
            {"worst_case_rate", m.worst_case_rate},
            {"worst_case_difference", m.worst_case_difference},
            {"nominal_rate", m.nominal_rate},
            {"p_d", m.p_d},
            {"inr_margin_db", m.inr_margin_db},
            {"mismatch", m.mismatch},
            {"rank_ratio", m.rank_ratio},
            {"secrecy_bound", m.secrecy_bound},
            {"rank_one_bound", m.rank_one_bound},
            {"sdr_ratio", m.sdr_ratio}};
}

std::string pass(bool ok)
{
    return ok ? "pass" : "FAIL";
}

}  // namespace

SingleReport run_single(const ExperimentConfig& cfg, std::ostream& out)
{
    cfg.validate();
    SingleReport rep;
    const CMatrix r_d = ideal_covariance(cfg.scenario);
    const std::uint64_t seed = derive_seed(cfg.seed, 0);
    const Scenario s = sample_scenario(seed, cfg.scenario);
    rep.design = run_design(s, r_d, cfg.design);
    const DesignSolution& d = rep.design;
    rep.metrics = evaluate_design(s, s, d, r_d, cfg, oracle_seed(cfg, 0));

    out << std::setprecision(6);
    out << "scenario     seed " << seed << ", digest " << scenario_digest(s) << ", N = " << s.n_bs
        << ", M = " << s.m_radar << ", P_C = " << watt_to_dbm(s.p_c) << " dBm, P_R = " << watt_to_dbm(s.p_r)
        << " dBm\n";
    out << "search       mu in [" << d.grid.mu_min << ", " << d.grid.mu_max << "], " << d.per_mu_trace.size()
        << " probes, " << d.pruned << " pruned, " << d.inner_solves << " inner solves, " << d.monotonicity_flags
        << " monotonicity flags, " << d.seconds << " s\n";
    out << "design       status " << to_string(d.status);

    if (d.status != DesignStatus::optimal)
    {
        out << "\n";
        rep.verdict = "failed";
        rep.diagnosis = d.diagnostic;
    }
    else
    {
        const CMatrix tt = d.t * d.t.adjoint();
        const CMatrix& r = d.R_x.matrix();
        rep.sdr_certificate =
            falsify(s, d.T.matrix(), r, d.eta_star, d.mu_star, cfg.falsifier_samples, seed ^ 0x5d7ULL);
        rep.design_certificate = falsify(s, tt, r, -kInf, d.mu_star, cfg.falsifier_samples, seed ^ 0xbeefULL);
        out << ", mu* = " << d.mu_star << ", eta* = " << d.eta_star << ", secrecy bound " << d.secrecy_bound()
            << " bit/s/Hz\n";
        out << "beamformer   rank ratio " << d.rank_ratio << (d.randomized ? ", randomized" : ", principal")
            << ", worst-case rate " << rep.metrics.worst_case_rate << " bit/s/Hz (oracle), nominal "
            << rep.metrics.nominal_rate << "\n";
        out << "radar        P_D " << rep.metrics.p_d << ", ||R_x - R_d||_F " << rep.metrics.mismatch
            << " (cap " << std::sqrt(s.gamma_p) << "), worst INR margin " << rep.metrics.inr_margin_db << " dB\n";
        const FalsifierReport& a = rep.sdr_certificate;
        const FalsifierReport& b = rep.design_certificate;
        out << "certificate  (T, R_x): Bob min SINR " << a.bob_min_sinr << " >= " << d.eta_star << " "
            << pass(a.bob_ok) << "; Eve max SINR " << a.eve_max_sinr << " <= " << d.mu_star << " " << pass(a.eve_ok)
            << "; INR/cap " << a.inr_max_ratio << " " << pass(a.inr_ok) << "\n";
        out << "certificate  (t, R_x): Eve max SINR " << b.eve_max_sinr << " <= " << d.mu_star << " "
            << pass(b.eve_ok) << "; INR/cap " << b.inr_max_ratio << " " << pass(b.inr_ok) << "\n";

        if (d.secrecy_bound() < 1e-3)
        {
            rep.verdict = "over-constrained";
            std::ostringstream why;
            why << "worst-case secrecy rate bound " << d.secrecy_bound() << " bit/s/Hz";
            int binding = 0;
            for (int k = 0; k < s.m_radar; ++k)
            {
                const CVector gc = s.g_bar[static_cast<std::size_t>(k)].conjugate();
                const double inr = max_quadratic_on_ball(d.T.matrix(), gc, s.eps_gm).value / s.sigma_r2;
                if (inr >= 0.99 * s.gamma_inr(k))
                    ++binding;
            }
            if (binding > 0)
                why << "; the INR cap (" << linear_to_db(s.gamma_inr.minCoeff()) << " dB) binds on " << binding
                    << " of " << s.m_radar << " radar antennas and limits the BS to tr(T) = " << d.T.trace()
                    << " W of " << s.p_c << " W";
            else if (d.T.trace() >= 0.99 * s.p_c)
                why << "; the BS power budget binds";
            else
                why << "; Bob's worst-case channel cannot carry a positive rate under the interference";
            if (!d.diagnostic.empty())
                why << ". " << d.diagnostic;
            rep.diagnosis = why.str();
        }
        else
        {
            rep.verdict = a.passed() && b.passed() && rep.metrics.certified ? "optimal" : "certificate failed";
            rep.diagnosis = d.diagnostic;
        }
    }
    out << "verdict      " << rep.verdict << "\n";
    if (!rep.diagnosis.empty())
        out << "diagnosis    " << rep.diagnosis << "\n";

    rep.json = {{"experiment", to_string(ExperimentKind::single)},
                {"version", code_version()},
                {"config_digest", digest(cfg.canonical())},
                {"seed", seed},
                {"scenario_digest", scenario_digest(s)},
                {"verdict", rep.verdict},
                {"diagnosis", rep.diagnosis},
                {"design", to_json(d)},
                {"metrics", metrics_json(rep.metrics)},
                {"sdr_certificate", falsifier_json(rep.sdr_certificate)},
                {"design_certificate", falsifier_json(rep.design_certificate)}};

    fs::create_directories(cfg.out_dir);
    std::ofstream csv(fs::path(cfg.out_dir) / "single.csv", std::ios::binary | std::ios::trunc);
    std::vector<std::string> cols = {"seed", "scenario_digest", "verdict"};
    cols.insert(cols.end(), kMetricColumns.begin(), kMetricColumns.end());
    csv << header_line(cfg, to_string(ExperimentKind::single)) << '\n' << join(cols) << '\n';
    std::vector<std::string> f = {std::to_string(seed), scenario_digest(s), rep.verdict};
    const auto mf = metric_fields(rep.metrics);
    f.insert(f.end(), mf.begin(), mf.end());
    csv << join(f) << '\n';
    write_json(fs::path(cfg.out_dir) / "single.json", rep.json);
    return rep;
}

// ---------------------------------------------------------------------------
// Selftest
// ---------------------------------------------------------------------------

int run_selftest(std::ostream& out)
{
    int failed = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        out << "selftest " << name << ": " << (ok ? "pass" : "FAIL") << " (" << detail << ")\n";
        failed += ok ? 0 : 1;
    };
    auto run = [&](const std::string& name, const std::function<void()>& fn) {
        try
        {
            fn();
        }
        catch (const std::exception& e)
        {
            check(name, false, std::string("threw: ") + e.what());
        }
    };

    run("realify", [&] {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> n(0.0, 1.0);
        CMatrix a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                a(i, j) = cplx(n(rng), n(rng));
        const HermitianMatrix h(hermitian_part(a));
        const RVector ev = hermitian_eigenvalues(h.matrix());
        const Eigen::SelfAdjointEigenSolver<RMatrix> es(realify_psd(h));
        RVector twice(6);
        for (int i = 0; i < 3; ++i)
            twice(2 * i) = twice(2 * i + 1) = ev(i);
        std::sort(twice.data(), twice.data() + 6);
        const double err = (es.eigenvalues() - twice).cwiseAbs().maxCoeff();
        check("realify", err <= 1e-9, "eigenvalue doubling error " + num(err));
    });

    run("detection", [&] {
        const DetectionOutcome d0 = detection_probability(0.0, 1e-4);
        const DetectionOutcome d1 = detection_probability(10.0, 1e-4);
        check("detection", std::abs(d0.p_d - 1e-4) <= 1e-10 && d1.p_d > d0.p_d,
              "P_D(0) = " + num(d0.p_d) + ", P_D(10) = " + num(d1.p_d));
    });

    run("design", [&] {
        ExperimentConfig cfg;
        cfg.scenario.n_bs = 2;
        cfg.scenario.m_radar = 2;
        cfg.design.coarse_points = 12;
        cfg.design.refinement = 1;
        cfg.falsifier_samples = 2000;
        cfg.oracle_budget = 500;
        const CMatrix r_d = ideal_covariance(cfg.scenario);
        const Scenario s = sample_scenario(derive_seed(1, 0), cfg.scenario);
        const DesignSolution d = run_design(s, r_d, cfg.design);
        const bool optimal = d.status == DesignStatus::optimal;
        const FalsifierReport f =
            optimal ? falsify(s, d.T.matrix(), d.R_x.matrix(), d.eta_star, d.mu_star, cfg.falsifier_samples, 3)
                    : FalsifierReport{};
        check("design", optimal && f.passed(),
              "status " + to_string(d.status) + ", mu* " + num(d.mu_star) + ", eta* " + num(d.eta_star) +
                  ", falsifier " + (f.passed() ? "clean" : "violated"));

        const CMatrix tt = d.t * d.t.adjoint();
        const double exact_wc = worst_case_secrecy_exact(s, tt, d.R_x.matrix()).difference;
        OracleOptions oo;
        oo.budget = 500;
        const double sampled = worst_case_secrecy(s, tt, d.R_x.matrix(), oo).difference;
        check("oracle", sampled >= exact_wc - 1e-9, "sampled " + num(sampled) + " vs exact " + num(exact_wc));
    });

    run("determinism", [&] {
        ScenarioTemplate tpl;
        const bool same_draw = scenario_digest(sample_scenario(42, tpl)) == scenario_digest(sample_scenario(42, tpl));
        check("determinism", same_draw, "scenario digest " + scenario_digest(sample_scenario(42, tpl)));
    });
    return failed;
}

}  // namespace rcc
