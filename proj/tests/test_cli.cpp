// End-to-end checks of the CLI binary: every command must reproduce the
// corresponding library calls byte-for-byte and behave on bad input.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "mobkit/connectivity.hpp"
#include "mobkit/csv.hpp"
#include "mobkit/leadlag.hpp"
#include "mobkit/netgraph.hpp"
#include "mobkit/odm.hpp"
#include "mobkit/regress.hpp"
#include "mobkit/rng.hpp"
#include "mobkit/synthgen.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace mobkit;

static std::string g_binary;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = g_binary + " " + args + " 2>cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path)
{
    return read_file(path.string());
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::path("cli_work") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << content;
}

} // namespace

TEST_CASE("connectivity command equals the library pipeline")
{
    const fs::path dir = fresh_dir("conn");
    write(dir / "regions.csv", "id,name,lat,lon,population,group_id\n"
                               "a1,a1,48.0,7.0,100,A\n"
                               "a2,a2,48.2,7.1,100,A\n"
                               "a3,a3,48.4,7.2,100,A\n"
                               "b1,b1,47.0,6.0,100,B\n"
                               "b2,b2,47.2,6.1,100,B\n");
    std::ostringstream odm;
    odm << "date,origin,destination,count\n";
    for (const char* o : {"a1", "a2", "a3", "b1", "b2"}) {
        for (const char* d : {"a1", "a2", "a3", "b1", "b2"}) {
            odm << "2020-02-24," << o << ',' << d << ",1\n";
        }
    }
    write(dir / "odm.csv", odm.str());

    const std::string out = (dir / "out").string();
    REQUIRE(run_cli("--out-dir " + out + " connectivity --odm " + (dir / "odm.csv").string() + " --regions " +
                    (dir / "regions.csv").string() + " --week 2020-02-24") == 0);

    const auto matrix = odm::ConnectivityMatrix::from_json(slurp(fs::path(out) / "connectivity.json"));
    REQUIRE(matrix.groups == std::vector<std::string>{"A", "B"});
    CHECK(matrix.at(0, 1) == doctest::Approx(6.0)); // 3x2 block of ones
    CHECK(matrix.at(0, 0) == doctest::Approx(9.0));

    // library-level oracle call on the same files
    std::ifstream reg_in((dir / "regions.csv").string());
    const auto registry = odm::RegionRegistry::load_csv(reg_in);
    std::ifstream odm_in((dir / "odm.csv").string());
    const auto series = odm::parse_odm(odm_in, registry);
    const auto direct = odm::aggregate_connectivity(series, {Date(2020, 2, 24), Date(2020, 2, 24)});
    CHECK(matrix.values == direct.values);

    // threshold above every count nulls the matrix
    const std::string out2 = (dir / "out2").string();
    REQUIRE(run_cli("--out-dir " + out2 + " connectivity --odm " + (dir / "odm.csv").string() + " --regions " +
                    (dir / "regions.csv").string() + " --week 2020-02-24 --threshold 99") == 0);
    const auto zero = odm::ConnectivityMatrix::from_json(slurp(fs::path(out2) / "connectivity.json"));
    for (double v : zero.values) CHECK(v == 0.0);

    CHECK(run_cli("--out-dir " + out + " connectivity --odm missing.csv --regions " +
                  (dir / "regions.csv").string() + " --week 2020-02-24") == 1);
    CHECK(slurp("cli_stderr.txt").find("error:") != std::string::npos);
}

TEST_CASE("synth corpus: deterministic per seed, thread count never changes bytes")
{
    const fs::path dir = fresh_dir("synth");
    const std::string args = " synth --n-regions 6 --days 60 --lockdown-day 30 --lag 7 --noise 0.05";

    REQUIRE(run_cli("--out-dir " + (dir / "a").string() + " --seed 5 --threads 1" + args) == 0);
    REQUIRE(run_cli("--out-dir " + (dir / "b").string() + " --seed 5 --threads 8" + args) == 0);
    REQUIRE(run_cli("--out-dir " + (dir / "c").string() + " --seed 6" + args) == 0);

    for (const char* name : {"odm.csv", "regions.csv", "deaths.csv", "igg.csv", "ground_truth.json",
                             "mobility/R003.csv", "synth_manifest.json"}) {
        CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    }
    CHECK(slurp(dir / "a" / "odm.csv") != slurp(dir / "c" / "odm.csv"));
}

TEST_CASE("regress command: exact fixture, distance null model, cut bookkeeping")
{
    const fs::path dir = fresh_dir("regress");

    // scattered regions with responses generated from log-mobility alone,
    // so the distance-only fit explains nothing
    mobkit::Rng rng(14); // frozen fixture
    const int n = 40;
    std::vector<double> lm(n);
    std::ostringstream regions, deaths;
    regions << "id,name,lat,lon,population,group_id\n";
    deaths << "date,region,value\n";
    odm::ConnectivityMatrix conn;
    conn.period = {Date(2020, 2, 24), Date(2020, 3, 1)};
    for (int i = 0; i < n; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "G%02d", i);
        conn.groups.push_back(buf);
        regions << buf << ',' << buf << ',' << format_double(rng.uniform(40.0, 50.0)) << ','
                << format_double(rng.uniform(0.0, 10.0)) << ",1000," << buf << "\n";
        lm[i] = rng.uniform(0.5, 8.0);
    }
    write(dir / "regions.csv", regions.str());

    conn.values.assign(n * n, 0.0);
    for (int b = 0; b < n; ++b) conn.values[static_cast<std::size_t>(b)] = std::exp(lm[b]); // row of G00
    write(dir / "connectivity.json", conn.to_json());

    for (int i = 0; i < n; ++i) {
        const double y = i == 3 ? 0.0 : 2.0 + 1.5 * lm[i] + 0.25 * lm[i] * lm[i]; // one zero row for the cut
        deaths << "2020-03-16," << conn.groups[i] << ',' << format_double(y) << "\n";
    }
    write(dir / "deaths.csv", deaths.str());

    const std::string out = (dir / "out").string();
    REQUIRE(run_cli("--out-dir " + out + " regress --connectivity " + (dir / "connectivity.json").string() +
                    " --regions " + (dir / "regions.csv").string() + " --deaths " + (dir / "deaths.csv").string() +
                    " --seed-region G00 --date 2020-03-16 --model mob --cut") == 0);

    const auto fit = nlohmann::json::parse(slurp(fs::path(out) / "fit.json"));
    CHECK(fit.at("r_squared").get<double>() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.at("n_rows").get<int>() == n - 1);
    CHECK(fit.at("terms")[1].at("coefficient").get<double>() == doctest::Approx(1.5).epsilon(1e-8));

    const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "regress_manifest.json"));
    CHECK(manifest.at("notes").at("cut_rows_removed").get<std::string>() == "1");
    CHECK(manifest.at("command_line").get<std::string>().find("--threads") == std::string::npos);

    // distance explains nothing here (response independent of distance)
    const std::string out2 = (dir / "out2").string();
    REQUIRE(run_cli("--out-dir " + out2 + " regress --connectivity " + (dir / "connectivity.json").string() +
                    " --regions " + (dir / "regions.csv").string() + " --deaths " + (dir / "deaths.csv").string() +
                    " --seed-region G00 --date 2020-03-16 --model dist --cut") == 0);
    const auto dist_fit = nlohmann::json::parse(slurp(fs::path(out2) / "fit.json"));
    CHECK(dist_fit.at("r_squared").get<double>() < 0.05);
}

TEST_CASE("leadlag and network commands equal the library on a synthetic corpus")
{
    const fs::path dir = fresh_dir("pipeline");
    const std::string corpus = (dir / "corpus").string();
    REQUIRE(run_cli("--out-dir " + corpus +
                    " --seed 11 synth --n-regions 5 --days 90 --lockdown-day 40 --lag 9") == 0);

    const std::string out = (dir / "lag_out").string();
    REQUIRE(run_cli("--out-dir " + out + " leadlag --mobility " + corpus + "/mobility/R002.csv --deaths " +
                    corpus + "/deaths/R002.csv --delta 30") == 0);
    const auto lag = nlohmann::json::parse(slurp(fs::path(out) / "lag.json"));
    CHECK(lag.at("theta_hat").get<double>() == 9.0);
    CHECK(lag.at("correlation_shifted").get<double>() == doctest::Approx(1.0).epsilon(1e-9));

    // library oracle on the same files
    std::ifstream mob_in(corpus + "/mobility/R002.csv"), deaths_in(corpus + "/deaths/R002.csv");
    const auto est = leadlag::estimate_lag(leadlag::normalize_mobility_reduction(leadlag::read_series_csv(mob_in)),
                                           leadlag::normalize_cumdeaths(leadlag::read_series_csv(deaths_in)),
                                           {.max_lag_days = 30});
    CHECK(lag.at("contrast_at_theta").get<double>() == est.contrast_at_theta);

    const std::string net_out = (dir / "net_out").string();
    REQUIRE(run_cli("--out-dir " + net_out + " --seed 3 network --series-dir " + corpus) == 0);
    const auto net = netgraph::parse_network(slurp(fs::path(net_out) / "network.json"));
    CHECK(net.nodes.size() == 5);
    for (const auto& e : net.edges) {
        CHECK(e.lag_days == 9);
        CHECK(e.origin != e.destination);
    }

    // library oracle: same inputs, same seed
    std::map<std::string, leadlag::IrregularSeries> mob, cum;
    for (const auto& entry : fs::directory_iterator(corpus + "/mobility")) {
        std::ifstream in(entry.path());
        mob.emplace(entry.path().stem().string(), leadlag::read_series_csv(in));
    }
    for (const auto& entry : fs::directory_iterator(corpus + "/deaths")) {
        std::ifstream in(entry.path());
        cum.emplace(entry.path().stem().string(), leadlag::read_series_csv(in));
    }
    auto direct = netgraph::build_network(mob, cum);
    direct = netgraph::detect_communities(direct, 3);
    CHECK(net == direct);
}

TEST_CASE("sweep and report: peak in the report equals the sweep argmax")
{
    const fs::path dir = fresh_dir("sweep");
    const std::string corpus = (dir / "corpus").string();
    REQUIRE(run_cli("--out-dir " + corpus + " --seed 21 synth --n-regions 16 --days 100 --lockdown-day 45 "
                    "--lag 10 --noise 0.03 --background 0.25 --outbreak-day 45") == 0);

    // connectivity for the week entering the lockdown (days 38..44)
    const std::string conn_out = (dir / "conn").string();
    REQUIRE(run_cli("--out-dir " + conn_out + " connectivity --odm " + corpus + "/odm.csv --regions " + corpus +
                    "/regions.csv --week 2020-02-08") == 0);

    const auto truth = nlohmann::json::parse(slurp(fs::path(corpus) / "ground_truth.json"));
    const std::string seed_region = truth.at("seed_region").get<std::string>();

    const std::string sweep_out = (dir / "sweep_out").string();
    REQUIRE(run_cli("--out-dir " + sweep_out + " sweep --regions " + corpus + "/regions.csv --deaths " + corpus +
                    "/deaths.csv --seed-region " + seed_region + " --connectivity " + conn_out +
                    "/connectivity.json --dates 2020-01-01:2020-04-09 --models mob --cut") == 0);

    // argmax over the sweep table
    std::ifstream sweep_in(sweep_out + "/sweep.csv");
    CsvReader reader(sweep_in);
    std::vector<std::string> fields;
    REQUIRE(reader.next(fields)); // header
    std::string best_date;
    double best_r2 = -1.0;
    while (reader.next(fields)) {
        if (fields[2] != "ok") continue;
        const double r2 = parse_double(fields[5], "r2");
        if (r2 > best_r2) {
            best_r2 = r2;
            best_date = fields[0];
        }
    }
    CHECK(best_r2 > 0.8);

    // week-sweep mode: mobility week varies, response date fixed
    const std::string wsweep_out = (dir / "wsweep_out").string();
    REQUIRE(run_cli("--out-dir " + wsweep_out + " sweep --regions " + corpus + "/regions.csv --deaths " + corpus +
                    "/deaths.csv --seed-region " + seed_region + " --odm " + corpus +
                    "/odm.csv --date 2020-03-10 --models mob --cut") == 0);
    std::ifstream wsweep_in(wsweep_out + "/sweep.csv");
    CsvReader wreader(wsweep_in);
    REQUIRE(wreader.next(fields)); // header
    std::set<std::string> week_starts;
    while (wreader.next(fields)) week_starts.insert(fields[0]);
    CHECK(week_starts.size() == 15); // 100 days -> 15 weekly windows
    CHECK(week_starts.count("2020-01-01") == 1);
    CHECK(week_starts.count("2020-04-08") == 1);

    const std::string lag_out = (dir / "lag_out").string();
    REQUIRE(run_cli("--out-dir " + lag_out + " leadlag --mobility " + corpus + "/mobility/R002.csv --deaths " +
                    corpus + "/deaths/R002.csv") == 0);
    const std::string net_out = (dir / "net_out").string();
    REQUIRE(run_cli("--out-dir " + net_out + " --seed 4 network --series-dir " + corpus) == 0);

    const std::string report_out = (dir / "report_out").string();
    REQUIRE(run_cli("--out-dir " + report_out + " report --sweep " + sweep_out + "/sweep.csv --lag " + lag_out +
                    "/lag.json --network " + net_out + "/network.json") == 0);

    std::ifstream report_in(report_out + "/report_data.csv");
    CsvReader rreader(report_in);
    REQUIRE(rreader.next(fields)); // header
    std::string report_best;
    double report_r2 = -1.0;
    int rows = 0, contrast_rows = 0, histogram_rows = 0;
    double histogram_total = 0.0;
    while (rreader.next(fields)) {
        REQUIRE(fields.size() == 4);
        ++rows;
        const double y = parse_double(fields[3], "y");
        if (fields[0] == "r_squared" && y > report_r2) {
            report_r2 = y;
            report_best = fields[2];
        }
        if (fields[0] == "contrast") ++contrast_rows;
        if (fields[0] == "lag_histogram") {
            ++histogram_rows;
            histogram_total += y;
        }
    }
    CHECK(rows > 50);
    CHECK(report_best == best_date);
    CHECK(report_r2 == doctest::Approx(best_r2));
    CHECK(contrast_rows > 10); // lag grid points
    CHECK(histogram_rows >= 1);
    CHECK(histogram_total == 16.0); // one lag per destination, all 16 regions

    const std::string svg = slurp(fs::path(report_out) / "report.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);

    // empty report is still a valid document
    const std::string empty_out = (dir / "empty_report").string();
    REQUIRE(run_cli("--out-dir " + empty_out + " report") == 0);
    CHECK(slurp(fs::path(empty_out) / "report.svg").find("<svg") != std::string::npos);
    CHECK(slurp(fs::path(empty_out) / "report_data.csv") == "panel,series,x,y\n");
}

TEST_CASE("config file supplies flags; MOBKIT_OUT_DIR supplies the default out dir")
{
    const fs::path dir = fresh_dir("config");
    write(dir / "run.cfg", "seed=5\n[synth]\nn-regions=6\ndays=60\nlockdown-day=30\nlag=7\nnoise=0.05\n");

    const fs::path out_env = dir / "from_env";
    ::setenv("MOBKIT_OUT_DIR", out_env.string().c_str(), 1);
    REQUIRE(run_cli("--config " + (dir / "run.cfg").string() + " synth") == 0);
    ::unsetenv("MOBKIT_OUT_DIR");

    // flags override the config file (seed 5 -> different corpus for seed 9)
    const fs::path out_flag = dir / "from_flag";
    REQUIRE(run_cli("--config " + (dir / "run.cfg").string() + " --out-dir " + out_flag.string() + " --seed 9 synth") ==
            0);

    // the env-dir run equals a plain run with the same parameters
    const fs::path out_ref = dir / "reference";
    REQUIRE(run_cli("--out-dir " + out_ref.string() +
                    " --seed 5 synth --n-regions 6 --days 60 --lockdown-day 30 --lag 7 --noise 0.05") == 0);
    CHECK(slurp(out_env / "odm.csv") == slurp(out_ref / "odm.csv"));
    CHECK(slurp(out_env / "ground_truth.json") == slurp(out_ref / "ground_truth.json"));
    CHECK(slurp(out_flag / "odm.csv") != slurp(out_ref / "odm.csv"));
}

int main(int argc, char** argv)
{
    // first positional argument: path to the binary under test
    if (argc > 1 && argv[1][0] != '-') {
        g_binary = argv[1];
        for (int i = 1; i + 1 < argc; ++i) argv[i] = argv[i + 1];
        --argc;
    }
    else if (const char* env = std::getenv("MOBKIT_BIN")) {
        g_binary = env;
    }
    if (g_binary.empty()) {
        std::fprintf(stderr, "usage: test_cli <path-to-mobkit-binary> [doctest args]\n");
        return 2;
    }
    doctest::Context context;
    context.applyCommandLine(argc, argv);
    return context.run();
}
