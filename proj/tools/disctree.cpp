// disctree CLI: estimate piecewise-constant densities from CSV samples and run
// the downstream analyses (modes, level-set tree, experiments, resampling).

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "disctree/disctree.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;

bool log_enabled() {
    const char* env = std::getenv("DISCTREE_LOG");
    return env != nullptr && *env != '\0';
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[disctree] " << msg << "\n";
}

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ColumnTransform {
    double min = 0.0;
    double max = 1.0;
};

struct IngestResult {
    disctree::SampleSet samples;
    bool rescaled = false;
    std::vector<ColumnTransform> transforms;
};

std::optional<double> parse_number(const std::string& token) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        while (pos < token.size() && std::isspace(static_cast<unsigned char>(token[pos]))) ++pos;
        if (pos != token.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

IngestResult ingest_csv(const std::string& path, bool rescale) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open input file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t ncols = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> tokens;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) tokens.push_back(tok);
        if (tokens.empty()) continue;

        std::vector<double> row;
        row.reserve(tokens.size());
        bool numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < tokens.size(); ++c) {
            auto v = parse_number(tokens[c]);
            if (!v) {
                numeric = false;
                bad_col = c;
                break;
            }
            row.push_back(*v);
        }
        if (!numeric) {
            if (first_data_row) {  // header row, auto-detected
                first_data_row = false;
                continue;
            }
            throw CsvError("non-numeric cell at row " + std::to_string(lineno) + ", column " +
                           std::to_string(bad_col + 1));
        }
        if (first_data_row) {
            ncols = row.size();
            first_data_row = false;
        } else if (row.size() != ncols && ncols > 0) {
            throw CsvError("ragged row " + std::to_string(lineno) + ": expected " +
                           std::to_string(ncols) + " columns, got " + std::to_string(row.size()));
        }
        if (ncols == 0) ncols = row.size();
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw CsvError("no data rows in " + path);

    IngestResult result;
    result.rescaled = rescale;
    if (rescale) {
        result.transforms.resize(ncols);
        for (std::size_t c = 0; c < ncols; ++c) {
            double lo = rows[0][c], hi = rows[0][c];
            for (const auto& r : rows) {
                lo = std::min(lo, r[c]);
                hi = std::max(hi, r[c]);
            }
            result.transforms[c] = {lo, hi};
            const double span = hi - lo;
            for (auto& r : rows) r[c] = span > 0.0 ? (r[c] - lo) / span : 0.5;
        }
    } else {
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t c = 0; c < ncols; ++c)
                if (rows[i][c] < 0.0 || rows[i][c] > 1.0)
                    throw CsvError("value " + std::to_string(rows[i][c]) + " at row " +
                                   std::to_string(i + 1) + ", column " + std::to_string(c + 1) +
                                   " is outside [0,1]; pass --rescale to min-max map columns");
    }
    result.samples = disctree::SampleSet(std::move(rows));
    return result;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void check_invariants(const disctree::EstimateResult& est, std::size_t n) {
    double mass = 0.0, integral = 0.0;
    std::size_t count = 0;
    for (const auto& c : est.density.cells) {
        mass += c.mass;
        integral += c.density * disctree::rect_volume(c.rect);
        count += c.count;
    }
    if (std::abs(mass - 1.0) > 1e-12 || std::abs(integral - 1.0) > 1e-12 || count != n)
        throw std::logic_error("partition invariant violated (mass=" + std::to_string(mass) +
                               ", integral=" + std::to_string(integral) + ")");
}

struct CommonOpts {
    std::string input;
    std::string out_dir = ".";
    double theta = 1.0;
    std::size_t m = 3;
    double epsilon = 0.001;
    double pseudo_count = 0.0;
    std::size_t max_depth = 50;
    std::string disc_mode = "auto";
    std::size_t grid_res = 64;
    std::uint64_t seed = 0;
    bool rescale = false;
    std::size_t max_leaves_report = 0;  // 0: report all decisions
};

disctree::EstimatorConfig make_config(const CommonOpts& o) {
    disctree::EstimatorConfig cfg;
    cfg.m = o.m;
    cfg.pseudo_count = o.pseudo_count;
    cfg.max_depth = o.max_depth;
    cfg.seed = o.seed;
    cfg.split.theta = o.theta;
    cfg.split.epsilon = o.epsilon;
    cfg.split.grid_resolution = o.grid_res;
    if (o.disc_mode == "exact")
        cfg.split.mode = disctree::DiscrepancyMode::Exact;
    else if (o.disc_mode == "grid")
        cfg.split.mode = disctree::DiscrepancyMode::Grid;
    else if (o.disc_mode == "l2")
        cfg.split.mode = disctree::DiscrepancyMode::L2Surrogate;
    else
        cfg.split.mode = disctree::DiscrepancyMode::Auto;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_input) {
    if (needs_input)
        cmd->add_option("--input", o.input, "input CSV of samples")->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--theta", o.theta, "split threshold scale theta");
    cmd->add_option("--m", o.m, "gap bins per dimension");
    cmd->add_option("--epsilon", o.epsilon, "split-without-checking cutoff");
    cmd->add_option("--pseudo-count", o.pseudo_count, "Laplace smoother alpha");
    cmd->add_option("--max-depth", o.max_depth, "deepest tree level");
    cmd->add_option("--disc-mode", o.disc_mode, "discrepancy mode: exact|grid|l2|auto")
        ->check(CLI::IsMember({"exact", "grid", "l2", "auto"}));
    cmd->add_option("--grid-res", o.grid_res, "grid discrepancy resolution");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_flag("--rescale", o.rescale, "min-max rescale input columns to [0,1]");
    cmd->add_option("--max-leaves-report", o.max_leaves_report,
                    "cap decision records in report.json (0 = all)");
}

nlohmann::ordered_json metadata_json(const CommonOpts& o, const IngestResult& data) {
    nlohmann::ordered_json meta;
    meta["input"] = o.input;
    meta["n"] = data.samples.size();
    meta["dimension"] = data.samples.dim();
    meta["seed"] = o.seed;
    meta["rescaled"] = data.rescaled;
    if (data.rescaled) {
        auto& arr = meta["rescale_transforms"] = nlohmann::ordered_json::array();
        for (const auto& t : data.transforms)
            arr.push_back({{"min", t.min}, {"max", t.max}});
    }
    return meta;
}

disctree::EstimateResult run_estimate(const CommonOpts& o, const IngestResult& data,
                                      const std::filesystem::path& out) {
    const auto cfg = make_config(o);
    log_line("estimating: n=" + std::to_string(data.samples.size()) +
             " d=" + std::to_string(data.samples.dim()));
    auto est = disctree::estimate_density(data.samples, cfg);
    check_invariants(est, data.samples.size());
    log_line("partition has " + std::to_string(est.density.cells.size()) + " leaves after " +
             std::to_string(est.report.sweeps) + " sweeps");

    std::filesystem::create_directories(out);
    write_file(out / "partition.json", disctree::tree_to_json(est.tree).dump(2) + "\n");

    auto report = disctree::report_to_json(est.report, cfg);
    report["metadata"] = metadata_json(o, data);
    if (o.max_leaves_report > 0 && report["decisions"].size() > o.max_leaves_report) {
        auto& dec = report["decisions"];
        dec.erase(dec.begin() + static_cast<long>(o.max_leaves_report), dec.end());
        report["decisions_truncated"] = true;
    }
    write_file(out / "report.json", report.dump(2) + "\n");
    return est;
}

int cmd_estimate(const CommonOpts& o) {
    const auto data = ingest_csv(o.input, o.rescale);
    run_estimate(o, data, o.out_dir);
    return 0;
}

int cmd_modes(const CommonOpts& o) {
    const auto data = ingest_csv(o.input, o.rescale);
    const auto est = run_estimate(o, data, o.out_dir);
    const auto graph = disctree::build_adjacency_graph(est.density);
    const auto modes = disctree::detect_modes(est.density, graph);

    nlohmann::ordered_json doc;
    doc["seed"] = o.seed;
    auto& arr = doc["modes"] = nlohmann::ordered_json::array();
    for (int id : modes) {
        const auto& c = est.density.cells[static_cast<std::size_t>(id)];
        arr.push_back({{"cell", id},
                       {"lower", c.rect.lower},
                       {"upper", c.rect.upper},
                       {"center", c.rect.center()},
                       {"density", c.density}});
    }
    write_file(std::filesystem::path(o.out_dir) / "modes.json", doc.dump(2) + "\n");
    return 0;
}

int cmd_tree(const CommonOpts& o) {
    const auto data = ingest_csv(o.input, o.rescale);
    const auto est = run_estimate(o, data, o.out_dir);
    const auto graph = disctree::build_adjacency_graph(est.density);
    const auto tree = disctree::build_level_set_tree(est.density, graph);
    const std::filesystem::path out(o.out_dir);
    write_file(out / "levelset.dot", disctree::level_set_tree_to_dot(tree));
    write_file(out / "levelset.json", disctree::level_set_tree_to_json(tree).dump(2) + "\n");
    return 0;
}

int cmd_sample(const CommonOpts& o, std::size_t n) {
    std::ifstream in(o.input);
    if (!in) throw CsvError("cannot open partition file: " + o.input);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw CsvError(std::string("invalid partition JSON: ") + e.what());
    }
    const auto tree = disctree::tree_from_json(doc);
    const auto pd = disctree::PiecewiseDensity::from_tree(tree);
    const auto samples = disctree::sample_from_estimate(pd, n, o.seed);

    std::ostringstream csv;
    csv.precision(17);
    for (const auto& p : samples.points) {
        for (std::size_t j = 0; j < p.size(); ++j) csv << (j ? "," : "") << p[j];
        csv << "\n";
    }
    std::filesystem::create_directories(o.out_dir);
    write_file(std::filesystem::path(o.out_dir) / "samples.csv", csv.str());
    return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& experiment, std::size_t dim,
             std::size_t size, std::size_t replicas) {
    const auto cfg = make_config(o);
    std::filesystem::create_directories(o.out_dir);
    const std::filesystem::path out(o.out_dir);
    nlohmann::ordered_json summary;
    summary["experiment"] = experiment;
    summary["seed"] = o.seed;

    if (experiment == "slope") {
        const auto spec = disctree::MixtureSpec::beta_bimodal(dim);
        const auto f = disctree::reference_f2(dim);
        std::vector<std::size_t> sizes;
        for (std::size_t s = std::max<std::size_t>(size / 100, 100); s <= size; s *= 4)
            sizes.push_back(s);
        if (sizes.size() < 3) sizes = {size / 16, size / 4, size};
        const auto result =
            disctree::convergence_slope(spec, f, sizes, replicas, cfg, o.seed, 200000);
        write_file(out / "results.csv", disctree::convergence_to_csv(result));
        summary.update(disctree::convergence_to_json(result));
    } else if (experiment == "hellinger") {
        const auto spec = disctree::MixtureSpec::four_gaussian_grid(dim);
        std::ostringstream csv;
        csv << "size,replica,error\n";
        double sum = 0.0;
        for (std::size_t rep = 0; rep < replicas; ++rep) {
            const auto samples = disctree::sample_mixture(spec, size, o.seed + rep + 1);
            const auto est = disctree::estimate_density(samples, cfg);
            check_invariants(est, size);
            const auto h = disctree::hellinger_distance(est.density, spec, 200000,
                                                        o.seed + 7919 * (rep + 1));
            csv << size << "," << rep << "," << h.distance << "\n";
            sum += h.distance;
        }
        write_file(out / "results.csv", csv.str());
        summary["hellinger_mean"] = sum / static_cast<double>(replicas);
    } else {  // rect
        const auto spec = disctree::MixtureSpec::four_gaussian_grid(dim);
        std::ostringstream csv;
        csv << "size,replica,error\n";
        double sum = 0.0;
        for (std::size_t rep = 0; rep < replicas; ++rep) {
            const auto samples = disctree::sample_mixture(spec, size, o.seed + rep + 1);
            const auto est = disctree::estimate_density(samples, cfg);
            check_invariants(est, size);
            const auto r = disctree::rect_probability_error(est.density, spec, 50,
                                                            o.seed + 104729 * (rep + 1), 200000);
            csv << size << "," << rep << "," << r.max_error << "\n";
            sum += r.max_error;
        }
        write_file(out / "results.csv", csv.str());
        summary["max_rect_error_mean"] = sum / static_cast<double>(replicas);
    }
    write_file(out / "summary.json", summary.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piecewise-constant density estimation via star discrepancy"};
    app.require_subcommand(1);

    CommonOpts opt_estimate, opt_modes, opt_tree, opt_sample, opt_eval;
    std::size_t sample_n = 1000;
    std::string experiment = "slope";
    std::size_t eval_dim = 2, eval_size = 10000, eval_replicas = 3;

    auto* c_estimate = app.add_subcommand("estimate", "estimate a density from CSV samples");
    add_common(c_estimate, opt_estimate, true);
    auto* c_modes = app.add_subcommand("modes", "estimate and detect density modes");
    add_common(c_modes, opt_modes, true);
    auto* c_tree = app.add_subcommand("tree", "estimate and build the level-set tree");
    add_common(c_tree, opt_tree, true);
    auto* c_sample = app.add_subcommand("sample", "draw points from a saved partition");
    c_sample->add_option("--input", opt_sample.input, "partition JSON file")->required();
    c_sample->add_option("--out", opt_sample.out_dir, "output directory");
    c_sample->add_option("--n", sample_n, "number of points to draw");
    c_sample->add_option("--seed", opt_sample.seed, "random seed");
    auto* c_eval = app.add_subcommand("eval", "run a built-in experiment");
    add_common(c_eval, opt_eval, false);
    c_eval->add_option("--experiment", experiment, "experiment: slope|hellinger|rect")
        ->check(CLI::IsMember({"slope", "hellinger", "rect"}));
    c_eval->add_option("--dim", eval_dim, "data dimension");
    c_eval->add_option("--size", eval_size, "largest sample size");
    c_eval->add_option("--replicas", eval_replicas, "replica count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_estimate->parsed()) return cmd_estimate(opt_estimate);
        if (c_modes->parsed()) return cmd_modes(opt_modes);
        if (c_tree->parsed()) return cmd_tree(opt_tree);
        if (c_sample->parsed()) return cmd_sample(opt_sample, sample_n);
        if (c_eval->parsed()) return cmd_eval(opt_eval, experiment, eval_dim, eval_size,
                                              eval_replicas);
    } catch (const CsvError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::logic_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
    return 0;
}
