// SPDX-FileCopyrightText: (c) 2026 roadrisk developers
//
// SPDX-License-Identifier: Apache-2.0

#include "pipeline.hpp"

#include "checkpoint.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "framework_validation.hpp"
#include "riskmap.hpp"
#include "synth.hpp"
#include "util.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

namespace roadrisk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Input/output bookkeeping for one command; becomes manifest_<cmd>.json.
class Artifacts {
public:
    Artifacts(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
        dir_ = cfg.output_dir();
        fs::create_directories(dir_);
    }

    fs::path dir() const { return dir_; }

    fs::path input_path(const fs::path& path) {
        if (!fs::exists(path))
            fail(ErrorKind::MissingArtifact, "MissingArtifact",
                 path.filename().string() + " (expected at " + path.string() + ")");
        inputs_[path.filename().string()] = fingerprint_file(path);
        return path;
    }
    fs::path input(const std::string& name) { return input_path(dir_ / name); }

    fs::path output(const std::string& name) {
        outputs_.push_back(name);
        const fs::path p = dir_ / name;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        return p;
    }

    json& extra() { return extra_; }

    void finish() {
        json out = json::array();
        for (const auto& name : outputs_) {
            const fs::path p = dir_ / name;
            out.push_back({{"name", name}, {"fingerprint", fs::exists(p) ? fingerprint_file(p) : ""}});
        }
        std::string joined;
        for (const auto& [name, fp] : inputs_) joined += name + "=" + fp + "\n";
        json m = {{"command", command_},
                  {"config_hash", cfg_.hash()},
                  {"seed", cfg_.seed()},
                  {"inputs", inputs_},
                  {"input_hash", hex64(fnv1a(joined))},
                  {"outputs", out}};
        if (!extra_.is_null()) m["summary"] = extra_;
        write_file(dir_ / ("manifest_" + command_ + ".json"), m.dump(2) + "\n");
    }

private:
    const RunConfig& cfg_;
    std::string command_;
    fs::path dir_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    json extra_;
};

std::string hash_line(const RunConfig& cfg) { return "# config_hash=" + cfg.hash() + "\n"; }

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

std::vector<AccidentRecord> load_records(Artifacts& a) {
    return parse_accident_csv(a.input("records.csv"), CsvSchema{}).records;
}

SpatialGraph load_graph(Artifacts& a) {
    const fs::path nodes = a.input("nodes.csv");
    const fs::path edges = a.input("edges.csv");
    return SpatialGraph::load(nodes, edges);
}

std::vector<Date> study_weeks(const RegionSpec& region) {
    return period_range(region.start, region.end, Granularity::Weekly);
}

// Diffused tensor plus the scaling and split stored beside it.
struct DiffusedArtifact {
    RiskTensor diffused;
    FeatureScaling scaling;
    Split split;
    json meta;
};

WeekRange range_from_json(const json& j) { return {j.at("begin").get<std::size_t>(), j.at("end").get<std::size_t>()}; }
json range_to_json(const WeekRange& r) { return {{"begin", r.begin}, {"end", r.end}}; }

json split_to_json(const Split& s) {
    return {{"train", range_to_json(s.train)}, {"val", range_to_json(s.val)}, {"test", range_to_json(s.test)}};
}

Split split_from_json(const json& j) {
    return {range_from_json(j.at("train")), range_from_json(j.at("val")), range_from_json(j.at("test"))};
}

DiffusedArtifact load_diffused(Artifacts& a) {
    DiffusedArtifact d;
    const fs::path bin = a.input("diffused.bin");
    const fs::path js = a.input("diffused.json");
    d.diffused = load_risk_tensor(bin, js, &d.meta);
    try {
        d.scaling = FeatureScaling::from_json(d.meta.at("scaling"));
        d.split = split_from_json(d.meta.at("split"));
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, "CorruptArtifact", std::string("diffused.json: ") + e.what());
    }
    return d;
}

ForecastData forecast_from(const DiffusedArtifact& d, const FeatureMask& features) {
    ForecastData data;
    data.scaled = d.scaling.apply(d.diffused);
    data.scaling = d.scaling;
    data.split = d.split;
    data.features = features;
    return data;
}

struct ModelArtifact {
    nn::ModelConfig config;
    nn::ParamSet params;
    FeatureMask features = kAllFeatures;
    json meta;
};

ModelArtifact load_model(Artifacts& a) {
    const fs::path bin = a.input("model.bin");
    const fs::path js = a.input("model.json");
    auto loaded = nn::load_params(bin, js);
    ModelArtifact m;
    m.params = std::move(loaded.params);
    m.meta = std::move(loaded.meta);
    try {
        m.config = nn::ModelConfig::from_json(m.meta.at("model"));
        const auto mask = feature_mask_from_name(m.meta.at("features").get<std::string>());
        if (!mask) fail(ErrorKind::Data, "CorruptArtifact", "model.json: bad feature set");
        m.features = *mask;
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, "CorruptArtifact", std::string("model.json: ") + e.what());
    }
    return m;
}

void check_nodes(const SpatialGraph& g, const RiskTensor& t) {
    if (g.num_nodes() != t.num_nodes())
        fail(ErrorKind::Data, "ShapeMismatch",
             "graph has " + std::to_string(g.num_nodes()) + " nodes, tensor has " + std::to_string(t.num_nodes()));
}

// ---------------------------------------------------------------- commands

void cmd_ingest(const RunConfig& cfg) {
    Artifacts a(cfg, "ingest");
    const auto parsed = parse_accident_csv(a.input_path(cfg.data_path()), cfg.schema());
    const auto kept = filter_region(parsed.records, cfg.region());
    write_file(a.output("records.csv"), records_to_csv(kept, cfg.hash()));
    write_file(a.output("rejects.csv"), rejects_to_csv(parsed.rejects, cfg.hash()));
    a.extra() = {{"rows_seen", parsed.rows_seen},
                 {"parsed", parsed.records.size()},
                 {"rejected", parsed.rejects.size()},
                 {"in_region", kept.size()}};
    log_info("ingest: " + std::to_string(parsed.rows_seen) + " rows, " + std::to_string(kept.size()) +
             " kept, " + std::to_string(parsed.rejects.size()) + " rejected");
    a.finish();
}

void cmd_snr(const RunConfig& cfg) {
    Artifacts a(cfg, "snr");
    const auto records = load_records(a);
    const auto region = cfg.region();
    const std::vector<int> node(records.size(), 0);
    std::ostringstream csv;
    csv << hash_line(cfg) << "granularity,periods,mean,sd,snr\n";
    json rows = json::array();
    for (auto g : {Granularity::Daily, Granularity::Weekly, Granularity::Monthly}) {
        const auto series = aggregate_temporal(records, node, 1, g, region.start, region.end);
        const auto s = snr(series);
        csv << granularity_name(g) << ',' << s.periods << ',' << format_double(s.mean) << ','
            << format_double(s.sd) << ',' << format_double(s.value) << '\n';
        rows.push_back({{"granularity", granularity_name(g)},
                        {"periods", s.periods},
                        {"mean", s.mean},
                        {"sd", s.sd},
                        {"snr", s.zero_variance ? json(nullptr) : json(s.value)},
                        {"zero_variance", s.zero_variance}});
        log_info("snr " + std::string(granularity_name(g)) + ": " + format_double(s.value));
    }
    write_file(a.output("snr.csv"), csv.str());
    write_json(a.output("snr.json"), {{"config_hash", cfg.hash()}, {"rows", rows}});
    a.finish();
}

void cmd_graph(const RunConfig& cfg) {
    Artifacts a(cfg, "graph");
    const auto records = load_records(a);
    const auto assignment = assign_to_nodes(records, cfg.cell_size_m());
    const auto graph = SpatialGraph::build(assignment.nodes, cfg.graph_k(), cfg.graph_sigma(), cfg.cell_size_m());
    graph.save(a.output("nodes.csv"), a.output("edges.csv"), cfg.hash());
    std::ostringstream asg;
    asg << hash_line(cfg) << "record_id,node_id\n";
    for (std::size_t r = 0; r < records.size(); ++r)
        asg << csv_escape(records[r].id) << ',' << assignment.node_of_record[r] << '\n';
    write_file(a.output("assignment.csv"), asg.str());
    const json summary = {{"config_hash", cfg.hash()},
                          {"nodes", graph.num_nodes()},
                          {"undirected_edges", graph.undirected_edges()},
                          {"directed_edges", graph.directed_edges()},
                          {"knn_links", graph.knn_links},
                          {"k", graph.k},
                          {"sigma", graph.sigma},
                          {"cell_size_m", graph.cell_size_m},
                          {"origin", {{"lon", assignment.origin.lon}, {"lat", assignment.origin.lat}}}};
    write_json(a.output("graph.json"), summary);
    a.extra() = {{"nodes", graph.num_nodes()}, {"undirected_edges", graph.undirected_edges()}};
    log_info("graph: " + std::to_string(graph.num_nodes()) + " nodes, " + std::to_string(graph.undirected_edges()) +
             " edges");
    a.finish();
}

void cmd_features(const RunConfig& cfg) {
    Artifacts a(cfg, "features");
    if (const auto w = cfg.weights_path()) a.input_path(*w);
    const auto records = load_records(a);
    const auto graph = load_graph(a);
    const auto table = read_csv_table(a.input("assignment.csv"));
    const std::size_t cid = table.column("record_id");
    const std::size_t cn = table.column("node_id");
    std::map<std::string, int> node_of_id;
    for (const auto& row : table.rows) {
        const auto v = parse_int(row.at(cn));
        if (!v || *v < 0 || static_cast<std::size_t>(*v) >= graph.num_nodes())
            fail(ErrorKind::Data, "CorruptArtifact", "assignment.csv: bad node id for " + row.at(cid));
        node_of_id[row.at(cid)] = static_cast<int>(*v);
    }
    std::vector<int> node_of_record;
    node_of_record.reserve(records.size());
    for (const auto& r : records) {
        auto it = node_of_id.find(r.id);
        if (it == node_of_id.end())
            fail(ErrorKind::Data, "CorruptArtifact", "record " + r.id + " missing from assignment.csv");
        node_of_record.push_back(it->second);
    }
    const auto weeks = study_weeks(cfg.region());
    const auto ids = graph.node_ids();
    const auto tensor = build_risk_tensor(cfg.weights(), cfg.temporal_weighting(), records, node_of_record, ids, weeks);
    const auto tw = cfg.to_json().at("temporal_weighting");
    save_risk_tensor(tensor, a.output("risk_tensor.bin"), a.output("risk_tensor.json"),
                     {{"config_hash", cfg.hash()}, {"temporal_weighting", tw}});
    a.extra() = {{"weeks", tensor.num_weeks()}, {"nodes", tensor.num_nodes()}};
    log_info("features: " + std::to_string(tensor.num_weeks()) + " weeks x " + std::to_string(tensor.num_nodes()) +
             " nodes");
    a.finish();
}

void cmd_diffuse(const RunConfig& cfg) {
    Artifacts a(cfg, "diffuse");
    const auto graph = load_graph(a);
    const fs::path bin = a.input("risk_tensor.bin");
    const auto raw = load_risk_tensor(bin, a.input("risk_tensor.json"));
    check_nodes(graph, raw);
    const auto dcfg = cfg.diffusion();
    const auto mcfg = cfg.model();
    const auto diffused = apply_diffusion(raw, graph.normalized, dcfg);
    const Split split = split_temporal(raw.num_weeks(), mcfg.t_in, mcfg.t_out);
    const auto scaling = FeatureScaling::fit(diffused, split.train.begin, split.train.end);
    save_risk_tensor(diffused, a.output("diffused.bin"), a.output("diffused.json"),
                     {{"config_hash", cfg.hash()},
                      {"diffusion", dcfg.to_json()},
                      {"scaling", scaling.to_json()},
                      {"split", split_to_json(split)}});
    a.extra() = {{"preset", dcfg.name}, {"split", split_to_json(split)}};
    log_info("diffuse: preset " + dcfg.name);
    a.finish();
}

void cmd_train(const RunConfig& cfg) {
    Artifacts a(cfg, "train");
    const auto graph = load_graph(a);
    const auto d = load_diffused(a);
    check_nodes(graph, d.diffused);
    const auto mcfg = cfg.model();
    const auto tcfg = cfg.train();
    const auto features = cfg.features();
    const ForecastData data = forecast_from(d, features);
    const nn::Model model(mcfg, dense_adjacency(graph));
    auto result = train(model, nn::init_params(mcfg, tcfg.seed), data, tcfg, [](const EpochRecord& r) {
        log_info("train " + r.phase + " epoch " + std::to_string(r.epoch) + ": train " +
                 format_double(r.train_loss) + " val " + format_double(r.val_loss) + (r.best ? " *" : ""));
    });
    nn::save_params(result.best_params, a.output("model.bin"), a.output("model.json"),
                    {{"config_hash", cfg.hash()},
                     {"model", mcfg.to_json()},
                     {"train", tcfg.to_json()},
                     {"features", feature_mask_name(features)},
                     {"diffusion", d.meta.value("diffusion", json())},
                     {"best_phase", result.best_phase},
                     {"best_epoch", result.best_epoch},
                     {"best_val_loss", result.best_val_loss}});
    std::ostringstream hist;
    hist << hash_line(cfg) << "phase,epoch,train_loss,val_loss,best\n";
    for (const auto& r : result.history)
        hist << r.phase << ',' << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss)
             << ',' << (r.best ? 1 : 0) << '\n';
    write_file(a.output("loss_history.csv"), hist.str());
    a.extra() = {{"best_phase", result.best_phase},
                 {"best_epoch", result.best_epoch},
                 {"best_val_loss", result.best_val_loss},
                 {"parameters", nn::param_count(result.best_params)}};
    a.finish();
}

void report_rows(std::ostringstream& csv, const std::string& method, const std::string& window, const EvalReport& r) {
    for (const auto& b : r.buckets)
        csv << method << ',' << window << ',' << b.name << ',' << format_double(b.mae) << ',' << format_double(b.rmse)
            << ',' << format_double(b.mape) << '\n';
    csv << method << ',' << window << ",overall," << format_double(r.overall_mae) << ','
        << format_double(r.overall_rmse) << ',' << format_double(r.overall_mape) << '\n';
}

double long_mape(const EvalReport& r) {
    const auto* b = r.bucket("long");
    return b ? b->mape : r.overall_mape;
}

void cmd_eval(const RunConfig& cfg) {
    Artifacts a(cfg, "eval");
    const auto graph = load_graph(a);
    const auto d = load_diffused(a);
    const auto m = load_model(a);
    check_nodes(graph, d.diffused);
    const ForecastData data = forecast_from(d, m.features);
    const nn::Model model(m.config, dense_adjacency(graph));
    const auto starts = window_starts(data.split.test, m.config.t_in, m.config.t_out);
    if (starts.empty()) fail(ErrorKind::Data, "InsufficientHistory", "no full test window");
    const double eps = cfg.mape_eps();
    const std::map<std::string, nn::Tensor> preds = {
        {"model", predict_windows(model, m.params, data, starts)},
        {"persistence", baseline_persistence(data, starts, m.config.t_in, m.config.t_out)},
        {"historical_mean", baseline_historical_mean(data, starts, m.config.t_out)},
    };
    json report = {{"config_hash", cfg.hash()}, {"test_windows", starts.size()}, {"methods", json::object()}};
    std::ostringstream csv;
    csv << hash_line(cfg) << "method,window,bucket,mae,rmse,mape\n";
    std::map<std::string, ForecastEvaluation> evals;
    for (const auto& [name, p] : preds) {
        evals[name] = evaluate_predictions(data, p, starts, m.config.t_in, eps);
        report["methods"][name] = {{"last_window", evals[name].last_window.to_json()},
                                   {"all_windows", evals[name].all_windows.to_json()}};
        report_rows(csv, name, "last", evals[name].last_window);
        report_rows(csv, name, "all", evals[name].all_windows);
    }
    auto gain = [&](const EvalReport& model_r, const EvalReport& base_r) {
        const double b = long_mape(base_r);
        return b > 0.0 ? (b - long_mape(model_r)) / b : 0.0;
    };
    report["long_mape_gain_vs_persistence"] = {
        {"last_window", gain(evals["model"].last_window, evals["persistence"].last_window)},
        {"all_windows", gain(evals["model"].all_windows, evals["persistence"].all_windows)}};
    write_json(a.output("eval_report.json"), report);
    write_file(a.output("eval_report.csv"), csv.str());

    std::ostringstream stab;
    stab << hash_line(cfg) << "week,model_mape,persistence_mape,historical_mean_mape\n";
    const auto& lm = evals["model"].last_window.week_mape;
    const auto& lp = evals["persistence"].last_window.week_mape;
    const auto& lh = evals["historical_mean"].last_window.week_mape;
    for (std::size_t w = 0; w < lm.size(); ++w)
        stab << w + 1 << ',' << format_double(lm[w]) << ',' << format_double(lp[w]) << ',' << format_double(lh[w])
             << '\n';
    write_file(a.output("stability.csv"), stab.str());
    log_info("eval: long-horizon MAPE model " + format_double(long_mape(evals["model"].last_window)) +
             " persistence " + format_double(long_mape(evals["persistence"].last_window)));
    a.finish();
}

template <class Fn> void cmd_ablate(const RunConfig& cfg, const std::string& name, Fn&& run) {
    Artifacts a(cfg, name);
    const auto graph = load_graph(a);
    const fs::path bin = a.input("risk_tensor.bin");
    const auto raw = load_risk_tensor(bin, a.input("risk_tensor.json"));
    check_nodes(graph, raw);
    const ArmRunner runner = [&](const json& arm) {
        log_info(name + ": training arm");
        return train_and_evaluate_arm(raw, graph, arm);
    };
    const AblationResult res = run(cfg.to_json(), runner);
    const std::string stem = name == "ablate-features" ? "ablation_features" : "ablation_diffusion";
    json j = res.to_json();
    j["config_hash"] = cfg.hash();
    write_json(a.output(stem + ".json"), j);
    write_file(a.output(stem + ".csv"), res.to_csv(cfg.hash()));
    if (!res.audit_passed)
        for (const auto& n : res.audit_notes) log_warning(name + " audit: " + n);
    a.extra() = {{"arms", res.arms.size()}, {"audit_passed", res.audit_passed}};
    a.finish();
}

void cmd_validate(const RunConfig& cfg) {
    Artifacts a(cfg, "validate-framework");
    if (const auto w = cfg.weights_path()) a.input_path(*w);
    const auto records = load_records(a);
    const auto weeks = study_weeks(cfg.region());
    const auto rep = validate_framework(cfg.weights(), cfg.temporal_weighting(), records, weeks,
                                        cfg.validation_cell_m());
    json j = rep.to_json();
    j["config_hash"] = cfg.hash();
    write_json(a.output("validation.json"), j);
    write_file(a.output("validation.csv"), rep.to_csv(cfg.hash()));
    for (const auto& n : rep.correlation.notes) log_warning("validate-framework: " + n);
    for (const auto& n : rep.temporal.notes) log_warning("validate-framework: " + n);
    for (const auto& n : rep.icc.notes) log_warning("validate-framework: " + n);
    for (const auto& n : rep.r2.notes) log_warning("validate-framework: " + n);
    a.finish();
}

void cmd_predict(const RunConfig& cfg) {
    Artifacts a(cfg, "predict");
    const auto graph = load_graph(a);
    const auto d = load_diffused(a);
    const auto m = load_model(a);
    check_nodes(graph, d.diffused);
    const ForecastData data = forecast_from(d, m.features);
    const std::size_t n = graph.num_nodes(), t_in = m.config.t_in, t_out = m.config.t_out;
    const std::size_t weeks = data.scaled.num_weeks();
    if (weeks < t_in) fail(ErrorKind::Data, "InsufficientHistory", "fewer weeks than the input window");
    const std::size_t s = weeks - t_in;
    nn::Tensor x({1, n, t_in, 3}, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < t_in; ++t)
            for (std::size_t f = 0; f < 3; ++f)
                x[(i * t_in + t) * 3 + f] = data.features[f] ? data.scaled.at(s + t, i, f) : 0.0;
    const nn::Model model(m.config, dense_adjacency(graph));
    nn::Tape tape;
    nn::BoundParams p(tape, m.params, false);
    const nn::Tensor pred = unscale_target(model.forward(p, tape.constant(x)).value(), data);
    if (!pred.all_finite()) fail(ErrorKind::Numeric, "NonFinitePrediction", "model produced a non-finite value");

    std::ostringstream csv;
    csv << hash_line(cfg) << "node_id,horizon,week,value\n";
    const Date last = data.scaled.weeks.back();
    for (std::size_t h = 0; h < t_out; ++h) {
        const std::string label = iso_week_label(last + std::chrono::days{7 * static_cast<long>(h + 1)});
        for (std::size_t i = 0; i < n; ++i)
            csv << graph.nodes[i].id << ',' << h + 1 << ',' << label << ',' << format_double(pred[i * t_out + h])
                << '\n';
    }
    write_file(a.output("predictions.csv"), csv.str());
    a.extra() = {{"horizon", t_out}, {"nodes", n}, {"input_weeks", {s, weeks}}};
    a.finish();
}

void cmd_map(const RunConfig& cfg) {
    Artifacts a(cfg, "map");
    const auto graph = load_graph(a);
    const auto table = read_csv_table(a.input("predictions.csv"));
    const std::size_t cn = table.column("node_id"), ch = table.column("horizon"), cw = table.column("week"),
                      cv = table.column("value");
    std::map<int, std::size_t> index_of;
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) index_of[graph.nodes[i].id] = i;
    std::map<long long, std::pair<std::string, std::vector<double>>> by_horizon;
    std::map<long long, std::vector<bool>> seen;
    for (const auto& row : table.rows) {
        const auto node = parse_int(row.at(cn));
        const auto h = parse_int(row.at(ch));
        const auto v = parse_double(row.at(cv));
        if (!node || !h || !v || !index_of.count(static_cast<int>(*node)))
            fail(ErrorKind::Data, "CorruptArtifact", "predictions.csv: malformed row");
        auto& [label, values] = by_horizon[*h];
        if (values.empty()) {
            label = row.at(cw);
            values.assign(graph.num_nodes(), 0.0);
            seen[*h].assign(graph.num_nodes(), false);
        }
        const std::size_t i = index_of[static_cast<int>(*node)];
        values[i] = *v;
        seen[*h][i] = true;
    }
    for (const auto& [h, flags] : seen)
        for (bool f : flags)
            if (!f) fail(ErrorKind::Data, "CorruptArtifact", "predictions.csv: missing node at horizon " + std::to_string(h));
    std::vector<ZoneMap> maps;
    for (const auto& [h, entry] : by_horizon) {
        maps.push_back(classify_zones(entry.first, entry.second));
        char name[32];
        std::snprintf(name, sizeof name, "maps/week_%02lld.geojson", h);
        export_geojson(maps.back(), graph.nodes, a.output(name), cfg.hash());
    }
    write_file(a.output("zones.csv"), zones_csv(maps, graph.nodes, cfg.hash()));
    a.extra() = {{"maps", maps.size()}};
    log_info("map: " + std::to_string(maps.size()) + " weekly maps");
    a.finish();
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"ingest",          "snr",     "graph", "features",
                                                "diffuse",         "train",   "eval",  "ablate-features",
                                                "ablate-diffusion", "validate-framework", "predict", "map"};
    return names;
}

void run_command(const RunConfig& cfg, std::string_view command) {
    if (command == "ingest") return cmd_ingest(cfg);
    if (command == "snr") return cmd_snr(cfg);
    if (command == "graph") return cmd_graph(cfg);
    if (command == "features") return cmd_features(cfg);
    if (command == "diffuse") return cmd_diffuse(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "eval") return cmd_eval(cfg);
    if (command == "ablate-features")
        return cmd_ablate(cfg, "ablate-features",
                          [](const json& base, const ArmRunner& r) { return run_feature_ablation(base, r); });
    if (command == "ablate-diffusion")
        return cmd_ablate(cfg, "ablate-diffusion", [](const json& base, const ArmRunner& r) {
            return run_diffusion_ablation(base, diffusion_presets(), r);
        });
    if (command == "validate-framework") return cmd_validate(cfg);
    if (command == "predict") return cmd_predict(cfg);
    if (command == "map") return cmd_map(cfg);
    fail(ErrorKind::InvalidArgument, "UnknownCommand", std::string(command));
}

void write_synthetic_fixture(const fs::path& path, std::uint64_t seed) {
    SynthConfig sc;
    sc.seed = seed;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, generate_synthetic(sc).csv);
}

nn::Tensor dense_adjacency(const SpatialGraph& graph) {
    const std::size_t n = graph.num_nodes();
    return nn::Tensor({n, n}, graph.normalized.dense());
}

ForecastData prepare_forecast(const RiskTensor& raw, const SpatialGraph& graph, const DiffusionConfig& diffusion,
                              const nn::ModelConfig& model, const FeatureMask& features) {
    check_nodes(graph, raw);
    const auto diffused = apply_diffusion(raw, graph.normalized, diffusion);
    ForecastData data;
    data.split = split_temporal(raw.num_weeks(), model.t_in, model.t_out);
    data.scaling = FeatureScaling::fit(diffused, data.split.train.begin, data.split.train.end);
    data.scaled = data.scaling.apply(diffused);
    data.features = features;
    return data;
}

ArmResult train_and_evaluate_arm(const RiskTensor& raw, const SpatialGraph& graph, const json& arm) {
    nn::ModelConfig mcfg;
    TrainConfig tcfg;
    DiffusionConfig dcfg;
    FeatureMask features = kAllFeatures;
    double eps = 1e-8;
    try {
        mcfg = nn::ModelConfig::from_json(arm.at("model"));
        tcfg = TrainConfig::from_json(arm.at("train"));
        dcfg = DiffusionConfig::from_json(arm.at("diffusion"));
        const auto mask = feature_mask_from_name(arm.at("features").get<std::string>());
        if (!mask) fail(ErrorKind::Config, "InvalidValue", "features: " + arm.at("features").dump());
        features = *mask;
        eps = arm.value("mape_eps", 1e-8);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, "InvalidArm", e.what());
    }
    const ForecastData data = prepare_forecast(raw, graph, dcfg, mcfg, features);
    const nn::Model model(mcfg, dense_adjacency(graph));
    const auto result = train(model, nn::init_params(mcfg, tcfg.seed), data, tcfg);
    const auto starts = window_starts(data.split.test, mcfg.t_in, mcfg.t_out);
    if (starts.empty()) fail(ErrorKind::Data, "InsufficientHistory", "no full test window");
    const auto pred = predict_windows(model, result.best_params, data, starts);
    const auto ev = evaluate_predictions(data, pred, starts, mcfg.t_in, eps);
    ArmResult out;
    out.config = arm;
    out.report = ev.last_window;
    out.report_all = ev.all_windows;
    out.best_val_loss = result.best_val_loss;
    return out;
}

ForecastEvaluation evaluate_predictions(const ForecastData& data, const nn::Tensor& scaled_pred,
                                        std::span<const std::size_t> starts, std::size_t t_in, double eps) {
    if (starts.empty() || scaled_pred.rank() != 3 || scaled_pred.dim(0) != starts.size())
        fail(ErrorKind::InvalidArgument, "ShapeMismatch", "prediction tensor " + nn::shape_str(scaled_pred.shape()));
    const std::size_t n = scaled_pred.dim(1), t_out = scaled_pred.dim(2);
    const Batch b = make_batch(data, starts, t_in, t_out);
    const nn::Tensor y = unscale_target(b.y, data);
    const nn::Tensor y_hat = unscale_target(scaled_pred, data);
    ForecastEvaluation ev;
    ev.all_windows = horizon_report(y_hat, y, eps);
    const std::size_t off = (starts.size() - 1) * n * t_out;
    const nn::Tensor last_hat({1, n, t_out}, std::vector<double>(y_hat.data() + off, y_hat.data() + off + n * t_out));
    const nn::Tensor last_y({1, n, t_out}, std::vector<double>(y.data() + off, y.data() + off + n * t_out));
    ev.last_window = horizon_report(last_hat, last_y, eps);
    return ev;
}

} // namespace roadrisk
