// mobkit: mobility-epidemic analytics pipeline as file-based subcommands.
// Every command composes library calls, writes its outputs plus a run
// manifest into --out-dir, and is deterministic for a given input set.

#include "mobkit/connectivity.hpp"
#include "mobkit/csv.hpp"
#include "mobkit/error.hpp"
#include "mobkit/leadlag.hpp"
#include "mobkit/manifest.hpp"
#include "mobkit/netgraph.hpp"
#include "mobkit/odm.hpp"
#include "mobkit/regress.hpp"
#include "mobkit/report.hpp"
#include "mobkit/synthgen.hpp"
#include "mobkit/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mobkit;

namespace {

struct GlobalOptions {
    int threads = 1;
    std::uint64_t seed = 42;
    bool seed_given = false;
    std::string out_dir;
};

std::string default_out_dir()
{
    const char* env = std::getenv("MOBKIT_OUT_DIR");
    return env && *env ? env : ".";
}

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    return in;
}

void write_output(const GlobalOptions& g, const std::string& name, const std::string& content)
{
    const fs::path path = fs::path(g.out_dir) / name;
    fs::create_directories(path.parent_path());
    write_file(path.string(), content);
}

// Manifest command lines are canonical option strings rebuilt from parsed
// values; execution-neutral flags (--threads) never appear, so reruns at
// any thread count produce identical bytes.
void write_manifest(const GlobalOptions& g, const std::string& command, const std::string& canonical_args,
                    const std::vector<std::string>& inputs, std::optional<std::uint64_t> rng_seed,
                    const std::map<std::string, std::string>& notes = {})
{
    RunManifest m;
    m.command_line = "mobkit " + command + (canonical_args.empty() ? "" : " " + canonical_args);
    m.tool_version = kVersion;
    m.config_digest = fnv1a_hex(m.command_line);
    for (const std::string& path : inputs) m.input_digests[path] = digest_file(path);
    m.rng_seed = rng_seed;
    m.notes = notes;
    write_output(g, command + "_manifest.json", m.to_json());
}

odm::RegionRegistry load_registry(const std::string& path)
{
    auto in = open_input(path);
    return odm::RegionRegistry::load_csv(in);
}

odm::ODMSeries load_odm(const std::string& path, const odm::RegionRegistry& registry)
{
    auto in = open_input(path);
    return odm::parse_odm(in, registry);
}

DateRange parse_date_span(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        const Date d = Date::parse(spec);
        return {d, d};
    }
    return {Date::parse(spec.substr(0, colon)), Date::parse(spec.substr(colon + 1))};
}

std::vector<regress::ModelKind> parse_models(const std::string& csv)
{
    std::vector<regress::ModelKind> kinds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) kinds.push_back(regress::parse_model_kind(item));
    if (kinds.empty()) throw Error("no model kinds given");
    return kinds;
}

// --- subcommand payloads ----------------------------------------------------

struct ConnectivityArgs {
    std::string odm_path, regions_path, week;
    double threshold = 0.0;
};

void run_connectivity(const GlobalOptions& g, const ConnectivityArgs& a)
{
    const auto registry = load_registry(a.regions_path);
    auto series = load_odm(a.odm_path, registry);
    if (a.threshold > 0.0) series = odm::apply_anonymity_threshold(series, a.threshold);

    const Date start = Date::parse(a.week);
    DateRange period{start, start + 6};
    if (period.end > series.date_range().end) period.end = series.date_range().end; // truncated week
    const auto matrix = odm::aggregate_connectivity(series, period);

    write_output(g, "connectivity.json", matrix.to_json());
    std::ostringstream csv;
    matrix.write_long_csv(csv);
    write_output(g, "connectivity.csv", csv.str());

    std::ostringstream args;
    args << "--odm " << a.odm_path << " --regions " << a.regions_path << " --week " << a.week << " --threshold "
         << format_double(a.threshold);
    write_manifest(g, "connectivity", args.str(), {a.odm_path, a.regions_path}, std::nullopt);
}

struct RegressArgs {
    std::string connectivity_path, regions_path, deaths_path, seed_region, date, model = "full";
    bool cut = false;
    bool log_response = false;
};

regress::RegressionDataset assemble_regression(const RegressArgs& a, const odm::RegionRegistry& registry,
                                               const odm::ConnectivityMatrix& matrix,
                                               const regress::ResponsePanel& panel, Date date)
{
    const std::uint32_t seed_index = registry.index_of(a.seed_region);
    const std::string seed_group = registry.groups()[registry.group_of(seed_index)];
    const auto mobility = regress::mobility_from_seed(matrix, seed_group);
    const auto distance = regress::distances_from_seed(registry, a.seed_region);

    regress::RegressionDataset ds;
    ds.response_date = date;
    ds.mobility_period = matrix.period;
    ds.seed_region = seed_group;
    ds.response_transform = a.log_response ? regress::ResponseTransform::Log : regress::ResponseTransform::Identity;
    for (const std::string& region : panel.regions()) {
        if (!panel.has(date, region)) continue;
        auto m = mobility.find(region);
        auto d = distance.find(region);
        if (m == mobility.end() || d == distance.end()) continue;
        ds.rows.push_back({region, panel.value(date, region), m->second, d->second});
    }
    return ds;
}

void run_regress(const GlobalOptions& g, const RegressArgs& a)
{
    const auto registry = load_registry(a.regions_path);
    const auto matrix = odm::ConnectivityMatrix::from_json(read_file(a.connectivity_path));
    auto deaths_in = open_input(a.deaths_path);
    const auto panel = regress::ResponsePanel::read_csv(deaths_in);
    const Date date = Date::parse(a.date);

    regress::RegressionDataset ds = assemble_regression(a, registry, matrix, panel, date);
    std::map<std::string, std::string> notes;
    if (a.cut) {
        const std::size_t before = ds.rows.size();
        ds = regress::select_cut(ds);
        notes["cut_rows_removed"] = std::to_string(before - ds.rows.size());
    }
    const auto fit = regress::fit_model(ds, regress::parse_model_kind(a.model));
    write_output(g, "fit.json", fit.to_json());

    std::ostringstream args;
    args << "--connectivity " << a.connectivity_path << " --regions " << a.regions_path << " --deaths "
         << a.deaths_path << " --seed-region " << a.seed_region << " --date " << a.date << " --model " << a.model
         << (a.cut ? " --cut" : "") << (a.log_response ? " --log-response" : "");
    write_manifest(g, "regress", args.str(), {a.connectivity_path, a.regions_path, a.deaths_path}, std::nullopt,
                   notes);
}

struct SweepArgs {
    std::string regions_path, deaths_path, seed_region, models = "full,mob,dist";
    std::string connectivity_path, dates;       // date sweep
    std::string odm_path, date, mobility_weeks; // week sweep
    bool cut = true;
    bool log_response = false;
};

void run_sweep(const GlobalOptions& g, const SweepArgs& a)
{
    const auto registry = load_registry(a.regions_path);
    auto deaths_in = open_input(a.deaths_path);
    const auto panel = regress::ResponsePanel::read_csv(deaths_in);
    const auto kinds = parse_models(a.models);
    const auto distance = regress::distances_from_seed(registry, a.seed_region);
    const std::string seed_group = registry.groups()[registry.group_of(registry.index_of(a.seed_region))];
    const auto transform = a.log_response ? regress::ResponseTransform::Log : regress::ResponseTransform::Identity;

    std::vector<regress::SweepEntry> table;
    std::vector<std::string> inputs = {a.regions_path, a.deaths_path};
    std::ostringstream args;
    args << "--regions " << a.regions_path << " --deaths " << a.deaths_path << " --seed-region " << a.seed_region
         << " --models " << a.models << (a.cut ? " --cut" : "") << (a.log_response ? " --log-response" : "");

    if (!a.dates.empty()) {
        if (a.connectivity_path.empty()) throw Error("sweep over --dates needs --connectivity");
        const auto matrix = odm::ConnectivityMatrix::from_json(read_file(a.connectivity_path));
        const auto mobility = regress::mobility_from_seed(matrix, seed_group);
        const DateRange span = parse_date_span(a.dates);
        std::vector<Date> dates;
        for (Date d = span.start; d <= span.end; ++d) dates.push_back(d);
        table = regress::sweep_fit_over_dates(panel, mobility, distance, dates, kinds, transform, a.cut, g.threads);
        inputs.push_back(a.connectivity_path);
        args << " --connectivity " << a.connectivity_path << " --dates " << a.dates;
    }
    else if (!a.date.empty()) {
        if (a.odm_path.empty()) throw Error("sweep over mobility weeks needs --odm");
        const auto series = load_odm(a.odm_path, registry);
        std::vector<std::pair<Date, std::map<std::string, double>>> weekly;
        for (const auto& m : odm::aggregate_weekly(series)) {
            weekly.push_back({m.period.start, regress::mobility_from_seed(m, seed_group)});
        }
        if (!a.mobility_weeks.empty()) {
            const DateRange span = parse_date_span(a.mobility_weeks);
            std::erase_if(weekly, [&span](const auto& w) { return !span.contains(w.first); });
        }
        table = regress::sweep_fit_over_weeks(panel, Date::parse(a.date), weekly, distance, kinds, transform,
                                              a.cut, g.threads);
        inputs.push_back(a.odm_path);
        args << " --odm " << a.odm_path << " --date " << a.date;
        if (!a.mobility_weeks.empty()) args << " --mobility-weeks " << a.mobility_weeks;
    }
    else {
        throw Error("sweep needs either --dates (with --connectivity) or --date (with --odm)");
    }

    std::ostringstream csv;
    regress::write_sweep_csv(table, csv);
    write_output(g, "sweep.csv", csv.str());
    write_manifest(g, "sweep", args.str(), inputs, std::nullopt);
}

struct LeadlagArgs {
    std::string mobility_path, deaths_path, mode = "pearson";
    double delta = 40.0, step = 1.0;
};

void run_leadlag(const GlobalOptions& g, const LeadlagArgs& a)
{
    auto mob_in = open_input(a.mobility_path);
    auto deaths_in = open_input(a.deaths_path);
    const auto mobility = leadlag::read_series_csv(mob_in);
    const auto deaths = leadlag::read_series_csv(deaths_in);

    leadlag::LagConfig config;
    config.max_lag_days = a.delta;
    config.step_days = a.step;
    if (a.mode == "hy") config.mode = leadlag::ContrastMode::HayashiYoshida;
    else if (a.mode != "pearson") throw Error("unknown contrast mode '" + a.mode + "' (expected pearson|hy)");

    const auto nmob = leadlag::normalize_mobility_reduction(mobility);
    const auto ncum = leadlag::normalize_cumdeaths(deaths);
    const auto est = leadlag::estimate_lag(nmob, ncum, config, g.threads);
    write_output(g, "lag.json", est.to_json(leadlag::lag_quality_flags(est)));

    std::ostringstream args;
    args << "--mobility " << a.mobility_path << " --deaths " << a.deaths_path << " --delta "
         << format_double(a.delta) << " --step " << format_double(a.step) << " --mode " << a.mode;
    write_manifest(g, "leadlag", args.str(), {a.mobility_path, a.deaths_path}, std::nullopt);
}

struct NetworkArgs {
    std::string series_dir;
    double delta = 40.0;
};

void run_network(const GlobalOptions& g, const NetworkArgs& a)
{
    const fs::path mob_dir = fs::path(a.series_dir) / "mobility";
    const fs::path deaths_dir = fs::path(a.series_dir) / "deaths";
    if (!fs::is_directory(mob_dir) || !fs::is_directory(deaths_dir)) {
        throw Error("series dir must contain mobility/ and deaths/ subdirectories: " + a.series_dir);
    }
    auto load_dir = [](const fs::path& dir) {
        std::map<std::string, leadlag::IrregularSeries> out;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& path : files) {
            auto in = open_input(path.string());
            out.emplace(path.stem().string(), leadlag::read_series_csv(in));
        }
        return out;
    };
    const auto mobility = load_dir(mob_dir);
    const auto deaths = load_dir(deaths_dir);

    netgraph::NetworkConfig config;
    config.lag.max_lag_days = a.delta;
    auto net = netgraph::build_network(mobility, deaths, config, g.threads);
    net = netgraph::detect_communities(net, g.seed);

    write_output(g, "network.json", netgraph::export_network(net, netgraph::ExportFormat::Json));
    write_output(g, "network.edges", netgraph::export_network(net, netgraph::ExportFormat::EdgeList));

    std::vector<std::string> inputs;
    for (const auto& [region, s] : mobility) inputs.push_back((mob_dir / (region + ".csv")).string());
    for (const auto& [region, s] : deaths) inputs.push_back((deaths_dir / (region + ".csv")).string());
    std::ostringstream args;
    args << "--series-dir " << a.series_dir << " --delta " << format_double(a.delta) << " --seed " << g.seed;
    write_manifest(g, "network", args.str(), inputs, g.seed);
}

struct SynthArgs {
    int n_regions = 30;
    std::string start = "2020-01-01";
    int days = 120;
    int lockdown_day = 45;
    double lockdown_strength = 0.8;
    int lag = 14;
    double noise = 0.0;
    double drift = 0.0;
    double background = 0.0;
    int outbreak_day = 0;
    double igg_scale = 0.1;
    int fine_cells = 1;
};

void run_synth(const GlobalOptions& g, const SynthArgs& a)
{
    synth::ScenarioConfig cfg;
    cfg.n_regions = a.n_regions;
    cfg.rng_seed = g.seed;
    cfg.date_range.start = Date::parse(a.start);
    cfg.date_range.end = cfg.date_range.start + (a.days - 1);
    cfg.lockdown_date = cfg.date_range.start + a.lockdown_day;
    cfg.lockdown_strength = a.lockdown_strength;
    cfg.planted_lag_days = a.lag;
    cfg.noise_sigma = a.noise;
    cfg.weekly_drift_sigma = a.drift;
    cfg.background_rate = a.background;
    cfg.outbreak_date = cfg.date_range.start + a.outbreak_day;
    cfg.igg_attack_rate_scale = a.igg_scale;
    cfg.fine_cells_per_region = a.fine_cells;

    const auto registry = synth::gen_regions(cfg);
    const auto series = synth::gen_odm(registry, cfg);
    const auto epidemic = synth::gen_epidemic(registry, series, cfg);

    std::ostringstream regions_csv;
    registry.save_csv(regions_csv);
    write_output(g, "regions.csv", regions_csv.str());

    std::ostringstream odm_csv;
    odm::serialize_odm(series, odm_csv);
    write_output(g, "odm.csv", odm_csv.str());

    std::ostringstream deaths_csv;
    epidemic.deaths_panel().write_csv(deaths_csv);
    write_output(g, "deaths.csv", deaths_csv.str());

    std::ostringstream igg_csv;
    igg_csv << "region,positives,tested\n";
    for (const auto& rec : epidemic.igg) {
        igg_csv << rec.region << ',' << format_double(rec.positives) << ',' << format_double(rec.tested) << '\n';
    }
    write_output(g, "igg.csv", igg_csv.str());

    for (const std::string& region : epidemic.regions) {
        std::ostringstream mob, deaths;
        leadlag::write_series_csv(epidemic.mobility.at(region), mob);
        leadlag::write_series_csv(epidemic.deaths_series(region), deaths);
        write_output(g, "mobility/" + region + ".csv", mob.str());
        write_output(g, "deaths/" + region + ".csv", deaths.str());
    }

    write_output(g, "ground_truth.json", epidemic.truth.to_json());

    std::ostringstream args;
    args << "--n-regions " << a.n_regions << " --start " << a.start << " --days " << a.days << " --lockdown-day "
         << a.lockdown_day << " --lockdown-strength " << format_double(a.lockdown_strength) << " --lag " << a.lag
         << " --noise " << format_double(a.noise) << " --drift " << format_double(a.drift) << " --background "
         << format_double(a.background) << " --outbreak-day " << a.outbreak_day << " --igg-scale "
         << format_double(a.igg_scale) << " --fine-cells " << a.fine_cells << " --seed " << g.seed;
    write_manifest(g, "synth", args.str(), {}, g.seed);
}

struct ReportArgs {
    std::vector<std::string> sweeps, lags, networks;
};

void run_report(const GlobalOptions& g, const ReportArgs& a)
{
    report::ReportBuilder builder;
    for (const std::string& path : a.sweeps) {
        // reparse the sweep CSV into r-squared curves
        auto in = open_input(path);
        CsvReader reader(in);
        std::vector<std::string> fields;
        if (!reader.next(fields)) throw Error("empty sweep file: " + path);
        std::map<std::string, std::map<Date, double>> curves; // model -> date -> r2
        while (reader.next(fields)) {
            if (fields.size() < 6 || fields[2] != "ok") continue;
            curves[fields[1]][Date::parse(fields[0])] = parse_double(fields[5], "sweep r_squared");
        }
        std::vector<regress::SweepEntry> entries;
        for (const auto& [model, points] : curves) {
            for (const auto& [date, r2] : points) {
                regress::SweepEntry e;
                e.date = date;
                e.kind = regress::parse_model_kind(model);
                e.fit.r_squared = r2;
                entries.push_back(std::move(e));
            }
        }
        builder.add_sweep(entries, fs::path(path).stem().string());
    }
    for (const std::string& path : a.lags) {
        const auto j = nlohmann::json::parse(read_file(path));
        leadlag::LagEstimate est;
        est.grid = j.at("grid").get<std::vector<double>>();
        for (const auto& c : j.at("contrast")) {
            est.excluded.push_back(c.is_null());
            est.contrast.push_back(c.is_null() ? 0.0 : c.get<double>());
        }
        est.theta_hat = j.at("theta_hat").get<double>();
        builder.add_lag_estimate(est, fs::path(path).stem().string());
    }
    for (const std::string& path : a.networks) {
        builder.add_network(netgraph::parse_network(read_file(path)), fs::path(path).stem().string());
    }

    write_output(g, "report_data.csv", builder.long_csv());
    write_output(g, "report.svg", builder.svg());

    std::vector<std::string> inputs;
    std::ostringstream args;
    for (const auto& p : a.sweeps) {
        inputs.push_back(p);
        args << "--sweep " << p << ' ';
    }
    for (const auto& p : a.lags) {
        inputs.push_back(p);
        args << "--lag " << p << ' ';
    }
    for (const auto& p : a.networks) {
        inputs.push_back(p);
        args << "--network " << p << ' ';
    }
    std::string arg_str = args.str();
    if (!arg_str.empty()) arg_str.pop_back();
    write_manifest(g, "report", arg_str, inputs, std::nullopt);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mobility-epidemic analytics toolkit"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "key=value config file; command-line flags take precedence");
    app.require_subcommand(1);

    GlobalOptions g;
    g.out_dir = default_out_dir();
    app.add_option("--threads", g.threads, "worker threads for library internals (never changes outputs)");
    app.add_option("--seed", g.seed, "seed for generation and clustering")->each([&g](const std::string&) {
        g.seed_given = true;
    });
    app.add_option("--out-dir", g.out_dir, "output directory (env MOBKIT_OUT_DIR)");

    ConnectivityArgs ca;
    auto* connectivity = app.add_subcommand("connectivity", "aggregate an ODM into a weekly connectivity matrix");
    connectivity->add_option("--odm", ca.odm_path)->required();
    connectivity->add_option("--regions", ca.regions_path)->required();
    connectivity->add_option("--week", ca.week, "week start date (YYYY-MM-DD)")->required();
    connectivity->add_option("--threshold", ca.threshold, "anonymity threshold k");

    RegressArgs ra;
    auto* regress_cmd = app.add_subcommand("regress", "fit the cross-sectional model at one date");
    regress_cmd->add_option("--connectivity", ra.connectivity_path)->required();
    regress_cmd->add_option("--regions", ra.regions_path)->required();
    regress_cmd->add_option("--deaths", ra.deaths_path)->required();
    regress_cmd->add_option("--seed-region", ra.seed_region)->required();
    regress_cmd->add_option("--date", ra.date)->required();
    regress_cmd->add_option("--model", ra.model, "full|mob|dist");
    regress_cmd->add_flag("--cut", ra.cut, "keep only rows with positive mobility and response");
    regress_cmd->add_flag("--log-response", ra.log_response);

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "refit over response dates or mobility weeks");
    sweep->add_option("--regions", sa.regions_path)->required();
    sweep->add_option("--deaths", sa.deaths_path)->required();
    sweep->add_option("--seed-region", sa.seed_region)->required();
    sweep->add_option("--models", sa.models, "comma list of full|mob|dist");
    sweep->add_option("--connectivity", sa.connectivity_path);
    sweep->add_option("--dates", sa.dates, "response date span D1:D2");
    sweep->add_option("--odm", sa.odm_path);
    sweep->add_option("--date", sa.date, "fixed response date for the week sweep");
    sweep->add_option("--mobility-weeks", sa.mobility_weeks, "restrict week starts to W1:W2");
    sweep->add_flag("--cut,!--no-cut", sa.cut);
    sweep->add_flag("--log-response", sa.log_response);

    LeadlagArgs la;
    auto* leadlag_cmd = app.add_subcommand("leadlag", "estimate the lag between two series");
    leadlag_cmd->add_option("--mobility", la.mobility_path)->required();
    leadlag_cmd->add_option("--deaths", la.deaths_path)->required();
    leadlag_cmd->add_option("--delta", la.delta, "maximum |lag| in days");
    leadlag_cmd->add_option("--step", la.step, "grid step in days");
    leadlag_cmd->add_option("--mode", la.mode, "pearson|hy");

    NetworkArgs na;
    auto* network = app.add_subcommand("network", "build and cluster the lead-lag network");
    network->add_option("--series-dir", na.series_dir, "directory with mobility/ and deaths/ series")->required();
    network->add_option("--delta", na.delta);

    SynthArgs sy;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
    synth_cmd->add_option("--n-regions", sy.n_regions);
    synth_cmd->add_option("--start", sy.start);
    synth_cmd->add_option("--days", sy.days);
    synth_cmd->add_option("--lockdown-day", sy.lockdown_day);
    synth_cmd->add_option("--lockdown-strength", sy.lockdown_strength);
    synth_cmd->add_option("--lag", sy.lag);
    synth_cmd->add_option("--noise", sy.noise);
    synth_cmd->add_option("--drift", sy.drift);
    synth_cmd->add_option("--background", sy.background);
    synth_cmd->add_option("--outbreak-day", sy.outbreak_day);
    synth_cmd->add_option("--igg-scale", sy.igg_scale);
    synth_cmd->add_option("--fine-cells", sy.fine_cells);

    ReportArgs rp;
    auto* report_cmd = app.add_subcommand("report", "plot-ready CSV and SVG summary");
    report_cmd->add_option("--sweep", rp.sweeps)->take_all();
    report_cmd->add_option("--lag", rp.lags)->take_all();
    report_cmd->add_option("--network", rp.networks)->take_all();

    CLI11_PARSE(app, argc, argv);

    try {
        if (connectivity->parsed()) run_connectivity(g, ca);
        else if (regress_cmd->parsed()) run_regress(g, ra);
        else if (sweep->parsed()) run_sweep(g, sa);
        else if (leadlag_cmd->parsed()) run_leadlag(g, la);
        else if (network->parsed()) run_network(g, na);
        else if (synth_cmd->parsed()) run_synth(g, sy);
        else if (report_cmd->parsed()) run_report(g, rp);
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
