// Command-line front door: training, evaluation and the verification
// harnesses as reproducible, config-driven runs. Exit codes: 0 ok,
// 2 config error, 3 training failure, 4 inconclusive oracle, 5 theorem
// violation.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "abstain/bound_checks.hpp"
#include "abstain/common.hpp"
#include "abstain/io/csv.hpp"
#include "abstain/io/model_io.hpp"
#include "abstain/io/problem_spec.hpp"
#include "abstain/io/report.hpp"
#include "abstain/io/synthetic.hpp"
#include "abstain/problem_eval.hpp"
#include "abstain/rademacher.hpp"
#include "abstain/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace abstain;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitInconclusive = 4;
constexpr int kExitViolation = 5;

constexpr const char* kCostHelp =
    "abstention cost c in (0,1); a practical choice sits close to the best "
    "achievable plain-classification error (much smaller abstains on almost "
    "everything, much larger never abstains)";

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a, b, step;
        char c1, c2;
        std::istringstream ss(text);
        if (!(ss >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
            throw std::invalid_argument("bad grid '" + text + "', expected start:stop:step");
        for (double v = a; v <= b + 1e-12; v += step) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty list '" + text + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_grid(text)) out.push_back(static_cast<int>(std::lround(v)));
    return out;
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

/// Accumulates the resolved configuration and written artifacts of one
/// run; flushed as <out>/manifest.json so the run can be reproduced.
class Manifest {
public:
    Manifest(std::string subcommand, std::string out_dir) : out_dir_(std::move(out_dir)) {
        body_["schema_version"] = 1;
        body_["subcommand"] = std::move(subcommand);
        body_["config"] = json::object();
        body_["artifacts"] = json::array();
        fs::create_directories(out_dir_);
    }

    template <typename T>
    void config(const std::string& key, const T& value) {
        body_["config"][key] = value;
    }

    std::string path(const std::string& name) const {
        return (fs::path(out_dir_) / name).string();
    }

    void artifact(const std::string& file) {
        body_["artifacts"].push_back({{"path", file}, {"fnv1a64", hash_file(file)}});
    }

    void flush() {
        std::ofstream out(path("manifest.json"));
        out << body_.dump(2) << "\n";
    }

private:
    std::string out_dir_;
    json body_;
};

/// Config file support: a JSON object whose keys mirror the long flag
/// names. Values are injected as synthetic flags for any key the
/// command line does not already carry, so flags take precedence.
std::vector<std::string> inject_config(std::vector<std::string> args) {
    auto find = [&args](const std::string& flag) {
        for (std::size_t i = 0; i < args.size(); ++i)
            if (args[i] == flag) return i;
        return args.size();
    };
    const auto cfg_at = find("--config");
    if (cfg_at == args.size()) return args;
    if (cfg_at + 1 >= args.size())
        throw std::invalid_argument("--config requires a file path");
    std::ifstream in(args[cfg_at + 1]);
    if (!in) throw std::invalid_argument("cannot open config file " + args[cfg_at + 1]);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument("malformed config file: " + std::string(e.what()));
    }
    if (!cfg.is_object())
        throw std::invalid_argument("config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") continue;
        const std::string flag = "--" + key;
        if (find(flag) != args.size()) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else {
            args.push_back(flag);
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return args;
}

MarginFunction::Kind parse_phi(const std::string& name) {
    if (name == "exp" || name == "exponential") return MarginFunction::Kind::exponential;
    if (name == "logistic") return MarginFunction::Kind::logistic;
    throw std::invalid_argument("unknown phi '" + name + "' (use exp or logistic)");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string csv, label = "y", problem, out = "run";
    std::string loss = "ce", phi = "exp", model = "linear", schedule = "constant";
    bool two_stage = false;
    double mu = 1.0, cost = 0.1, lr = 0.5, l2 = 0.0, clamp = 0.0;
    int epochs = 300, batch = 32, width = 64;
    std::uint64_t seed = 1;
    bool mu_given = false;
};

int cmd_train(const TrainArgs& a) {
    if (a.two_stage && a.mu_given) {
        std::cerr << "train: --mu and --two-stage are mutually exclusive\n";
        return kExitConfig;
    }
    if (a.csv.empty() == a.problem.empty()) {
        std::cerr << "train: exactly one of --csv or --problem is required\n";
        return kExitConfig;
    }
    TabularDataset data;
    if (!a.csv.empty())
        data = load_csv(a.csv, a.label);
    else
        data = expand_problem_to_dataset(load_problem_spec(a.problem));

    TrainConfig cfg;
    cfg.cost = a.cost;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.schedule = a.schedule == "cosine" ? TrainConfig::Schedule::cosine
                                          : TrainConfig::Schedule::constant;
    cfg.seed = a.seed;
    cfg.l2 = a.l2;
    cfg.clamp = a.clamp;
    cfg.model_kind = a.model == "mlp" ? Model::Kind::mlp : Model::Kind::linear;
    cfg.hidden_width = a.width;

    Manifest manifest("train", a.out);
    manifest.config("csv", a.csv);
    manifest.config("label", a.label);
    manifest.config("problem", a.problem);
    manifest.config("two_stage", a.two_stage);
    manifest.config("loss", a.loss);
    manifest.config("mu", a.mu);
    manifest.config("phi", a.phi);
    manifest.config("cost", a.cost);
    manifest.config("model", a.model);
    manifest.config("width", a.width);
    manifest.config("clamp", a.clamp);
    manifest.config("epochs", a.epochs);
    manifest.config("batch", a.batch);
    manifest.config("lr", a.lr);
    manifest.config("lr_schedule", a.schedule);
    manifest.config("l2", a.l2);
    manifest.config("seed", a.seed);

    json metrics_body;
    if (a.two_stage) {
        TrainConfig cfg1 = cfg;
        cfg1.loss = LossSelector::comp_sum_mu(1.0);
        TrainConfig cfg2 = cfg;
        cfg2.loss = LossSelector::two_stage_phi(parse_phi(a.phi));
        const auto pair = train_two_stage(data, cfg1, cfg2);
        save_model(manifest.path("predictor.model"), pair.predictor);
        save_model(manifest.path("rejector.model"), pair.rejector);
        manifest.artifact(manifest.path("predictor.model"));
        manifest.artifact(manifest.path("rejector.model"));
        const auto metrics =
            evaluate_two_stage(pair.predictor, pair.rejector, data, CostModel(a.cost),
                               MarginFunction(parse_phi(a.phi)));
        metrics_body = to_json(metrics);
        std::cerr << "train: two-stage abstention loss " << metrics.abstention_loss
                  << ", rejection rate " << metrics.rejection_rate << "\n";
    } else {
        cfg.loss = LossSelector::comp_sum_mu(a.mu);
        const auto result = train_single_stage(data, cfg);
        save_model(manifest.path("model.model"), result.model);
        manifest.artifact(manifest.path("model.model"));
        const auto metrics =
            evaluate(result.model, data, CostModel(a.cost), CompSumParams(a.mu));
        metrics_body = to_json(metrics);
        metrics_body["final_training_loss"] = result.final_loss;
        metrics_body["lr_halvings"] = result.lr_halvings;
        std::cerr << "train: abstention loss " << metrics.abstention_loss
                  << ", rejection rate " << metrics.rejection_rate << "\n";
    }
    write_report(manifest.path("metrics.json"), "metrics", metrics_body);
    manifest.artifact(manifest.path("metrics.json"));
    manifest.flush();
    return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
    std::vector<std::string> models;
    std::string csv, label = "y", out = "eval";
    double cost = -1.0;  // default: model provenance
};

int cmd_eval(const EvalArgs& a) {
    if (a.models.empty() || a.csv.empty()) {
        std::cerr << "eval: --model and --csv are required\n";
        return kExitConfig;
    }
    const auto data = load_csv(a.csv, a.label);
    Manifest manifest("eval", a.out);
    manifest.config("csv", a.csv);
    manifest.config("label", a.label);
    manifest.config("models", a.models);
    manifest.config("cost", a.cost);

    std::vector<double> losses;
    json runs = json::array();
    for (const auto& path : a.models) {
        const auto model = load_model(path);
        if (model.input_dim != data.d) {
            std::cerr << "eval: model " << path << " expects d=" << model.input_dim
                      << " but dataset has d=" << data.d << "\n";
            return kExitConfig;
        }
        if (model.output_count != data.n + 1) {
            std::cerr << "eval: model " << path << " produces " << model.output_count
                      << " scores; dataset needs n+1=" << data.n + 1 << "\n";
            return kExitConfig;
        }
        const double cost = a.cost > 0.0 ? a.cost : model.cost;
        const auto metrics = evaluate(model, data, CostModel(cost),
                                      CompSumParams(model.mu > 0 ? model.mu : 1.0));
        losses.push_back(metrics.abstention_loss);
        auto entry = to_json(metrics);
        entry["model"] = path;
        runs.push_back(entry);
    }
    double mean = 0.0;
    for (double v : losses) mean += v;
    mean /= static_cast<double>(losses.size());
    json body = {{"runs", runs}, {"abstention_loss_mean", mean}};
    if (losses.size() > 1) {
        double var = 0.0;
        for (double v : losses) var += (v - mean) * (v - mean);
        body["abstention_loss_std"] = std::sqrt(var / (losses.size() - 1.0));
    }
    write_report(manifest.path("eval.json"), "metrics", body);
    manifest.artifact(manifest.path("eval.json"));
    manifest.flush();
    std::cerr << "eval: mean abstention loss " << mean << " over " << losses.size()
              << " model(s)\n";
    return kExitOk;
}

// --------------------------------------------------------------- verify

struct VerifyArgs {
    std::string theorem = "3.1";
    std::string mu = "0,0.5,1,1.5,2,3";
    std::string cost = "0.05,0.25,0.5,0.9";
    std::string n = "2,3,5";
    std::string phi = "exp";
    std::string out = "verify";
    long trials = 10000;
    int atoms = 5;
    std::uint64_t seed = 1;
    unsigned jobs = 0;
    bool mutate = false;
    double stress = 0.1;
};

int cmd_verify(const VerifyArgs& a) {
    Manifest manifest("verify", a.out);
    manifest.config("theorem", a.theorem);
    manifest.config("mu", a.mu);
    manifest.config("cost", a.cost);
    manifest.config("n", a.n);
    manifest.config("phi", a.phi);
    manifest.config("trials", a.trials);
    manifest.config("seed", a.seed);
    manifest.config("mutate", a.mutate);
    manifest.config("stress", a.stress);

    SamplerConfig cfg;
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.workers = a.jobs;
    cfg.stress_fraction = a.stress;
    cfg.gamma_scale = a.mutate ? 0.5 : 1.0;
    cfg.atoms_per_problem = a.atoms;

    std::vector<BoundCheckReport> reports;
    int index = 0;
    auto emit = [&](const BoundCheckReport& rep) {
        const std::string file = manifest.path("check_" + std::to_string(index++) + ".json");
        write_report(file, "bound_check", to_json(rep));
        manifest.artifact(file);
        std::cerr << (rep.passed ? "PASS " : "FAIL ") << rep.name << " (" << rep.trials
                  << " trials, " << rep.violation_count << " violations, min slack "
                  << rep.min_slack << ")\n";
        reports.push_back(rep);
    };

    if (a.theorem == "3.1") {
        for (double mu : parse_grid(a.mu))
            for (double c : parse_grid(a.cost))
                for (int n : parse_int_list(a.n))
                    emit(check_theorem_3_1(CompSumParams(mu), CostModel(c), n, cfg));
    } else if (a.theorem == "3.3") {
        for (double c : parse_grid(a.cost)) {
            for (int n : parse_int_list(a.n)) {
                emit(check_theorem_3_3(GammaTransform::sqrt(2.0), CompSumParams(1.0),
                                       CostModel(c), n, cfg));
                emit(check_theorem_3_3(GammaTransform::linear(n + 1.0), CompSumParams(2.0),
                                       CostModel(c), n, cfg));
            }
        }
    } else if (a.theorem == "4.1") {
        const MarginFunction phi(parse_phi(a.phi));
        GammaTransform gamma2 = GammaTransform::sqrt(2.0);
        if (phi.kind() == MarginFunction::Kind::exponential) {
            SamplerConfig cal = cfg;
            cal.trials = std::max<long>(a.trials, 5000);
            cal.gamma_scale = 1.0;
            gamma2 = gamma_from_envelope(estimate_calibration_binary(phi, cal));
            std::cerr << "verify: fitted second-stage transform " << gamma2.describe()
                      << "\n";
        }
        Rng problem_rng(a.seed ^ 0xfeedULL);
        for (double c : parse_grid(a.cost)) {
            for (int n : parse_int_list(a.n)) {
                std::vector<DiscreteProblem::Atom> atoms;
                const auto w = problem_rng.simplex(static_cast<std::size_t>(a.atoms));
                for (int k = 0; k < a.atoms; ++k)
                    atoms.push_back(
                        {w[static_cast<std::size_t>(k)],
                         ConditionalDistribution(
                             problem_rng.simplex(static_cast<std::size_t>(n)), CostModel(c)),
                         std::nullopt});
                emit(check_theorem_4_1(DiscreteProblem(std::move(atoms)),
                                       GammaTransform::sqrt(2.0), gamma2, phi, cfg));
            }
        }
    } else if (a.theorem == "envelope") {
        // empirical calibration envelopes for (L_abs, L_mu); each bin's
        // max target gap must stay under the closed-form transform
        for (double mu : parse_grid(a.mu)) {
            for (double c : parse_grid(a.cost)) {
                for (int n : parse_int_list(a.n)) {
                    SamplerConfig cal = cfg;
                    cal.gamma_scale = 1.0;
                    const auto curve = estimate_calibration_abstention(
                        CompSumParams(mu), CostModel(c), n, cal);
                    BoundCheckReport rep;
                    rep.name = "envelope mu=" + std::to_string(mu) +
                               " c=" + std::to_string(c) + " n=" + std::to_string(n);
                    rep.trials = curve.samples;
                    rep.max_slack = 0.0;
                    rep.min_slack = std::numeric_limits<double>::infinity();
                    for (std::size_t b = 0; b < curve.max_target.size(); ++b) {
                        if (!curve.max_target[b]) continue;
                        const double lhs = *curve.max_target[b];
                        const double rhs =
                            cfg.gamma_scale * gamma_mu(curve.bin_edges[b + 1], mu, c, n);
                        rep.max_slack = std::max(rep.max_slack, rhs - lhs);
                        rep.min_slack = std::min(rep.min_slack, rhs - lhs);
                        if (lhs > rhs + 1e-9) {
                            rep.violation_count += 1;
                            rep.violations.push_back({"bin " + std::to_string(b), lhs, rhs});
                        }
                    }
                    if (!std::isfinite(rep.min_slack)) rep.min_slack = 0.0;
                    rep.finish();
                    const std::string curve_file =
                        manifest.path("curve_" + std::to_string(index) + ".json");
                    write_report(curve_file, "calibration_curve", to_json(curve));
                    manifest.artifact(curve_file);
                    emit(rep);
                }
            }
        }
    } else {
        std::cerr << "verify: unknown theorem '" << a.theorem
                  << "' (use 3.1, 3.3, 4.1 or envelope)\n";
        return kExitConfig;
    }
    manifest.flush();

    long violations = 0, failures = 0, trials = 0;
    for (const auto& r : reports) {
        violations += r.violation_count;
        failures += r.oracle_failures;
        trials += r.trials;
    }
    if (failures > trials / 1000) return kExitInconclusive;
    return violations > 0 ? kExitViolation : kExitOk;
}

// ----------------------------------------------------------------- gaps

struct GapsArgs {
    std::string mu_grid = "0:4:0.1";
    std::string cost = "0.5";
    std::string out = "gaps";
    std::string demo;
    double lambda = 2.0, eta = 1.0;
};

int cmd_gaps(const GapsArgs& a) {
    Manifest manifest("gaps", a.out);
    manifest.config("mu_grid", a.mu_grid);
    manifest.config("cost", a.cost);
    manifest.config("demo", a.demo);
    manifest.config("lambda", a.lambda);
    manifest.config("eta", a.eta);

    if (a.demo == "appendix-f") {
        const auto rec = approx_vs_gap_demo(a.lambda, a.eta);
        json body = {{"lambda", a.lambda},
                     {"eta", a.eta},
                     {"bounded_inf", rec.bounded_inf},
                     {"unbounded_inf", rec.unbounded_inf},
                     {"difference", rec.difference}};
        write_report(manifest.path("appendix_f.json"), "approx_vs_gap", body);
        manifest.artifact(manifest.path("appendix_f.json"));
        manifest.flush();
        std::cerr << "gaps: bounded inf " << rec.bounded_inf << ", unbounded "
                  << rec.unbounded_inf << ", difference " << rec.difference << "\n";
        return kExitOk;
    }
    if (!a.demo.empty()) {
        std::cerr << "gaps: unknown demo '" << a.demo << "'\n";
        return kExitConfig;
    }

    const auto mus = parse_grid(a.mu_grid);
    const auto costs = parse_grid(a.cost);
    for (double mu : mus)
        if (mu < 0.0) {
            std::cerr << "gaps: mu must be >= 0\n";
            return kExitConfig;
        }

    CsvTable table;
    table.header = {"mu"};
    for (double c : costs) table.header.push_back("V_c" + CsvTable::num(c));
    bool monotone = true;
    json cells = json::array();
    std::vector<double> prev(costs.size(), std::numeric_limits<double>::infinity());
    for (double mu : mus) {
        std::vector<std::string> row{CsvTable::num(mu)};
        for (std::size_t ci = 0; ci < costs.size(); ++ci) {
            std::vector<DiscreteProblem::Atom> atoms;
            atoms.push_back(
                {1.0, ConditionalDistribution({1.0, 0.0}, CostModel(costs[ci])), std::nullopt});
            const auto rep =
                minimizability_gap(DiscreteProblem(std::move(atoms)),
                                   FamilyDescriptor::symmetric_complete(), CompSumParams(mu));
            row.push_back(CsvTable::num(rep.closed_form_v));
            cells.push_back(to_json(rep));
            if (rep.closed_form_v >= prev[ci]) monotone = false;
            prev[ci] = rep.closed_form_v;
        }
        table.add_row(row);
    }
    json body = {{"cells", cells}, {"monotone_decreasing", monotone}};
    write_report(manifest.path("gap_sweep.json"), "gap_sweep", body, table);
    manifest.artifact(manifest.path("gap_sweep.json"));
    manifest.flush();
    std::cerr << "gaps: " << mus.size() << " mu values x " << costs.size()
              << " costs, monotone=" << (monotone ? "yes" : "no") << "\n";
    return monotone ? kExitOk : kExitViolation;
}

// ------------------------------------------------------------ realizable

struct RealizableArgs {
    int n = 3, d = 2, atoms = 60;
    double gamma = 0.5, cost = 0.2;
    std::uint64_t seed = 7;
    int epochs = 400;
    std::string out = "realizable";
};

int cmd_realizable(const RealizableArgs& a) {
    SyntheticRecipe recipe;
    recipe.kind = SyntheticRecipe::Kind::separable_margin;
    recipe.n = a.n;
    recipe.d = a.d;
    recipe.c = a.cost;
    recipe.margin = a.gamma;
    recipe.atom_count = a.atoms;
    recipe.seed = a.seed;

    Manifest manifest("realizable", a.out);
    manifest.config("n", a.n);
    manifest.config("d", a.d);
    manifest.config("gamma", a.gamma);
    manifest.config("cost", a.cost);
    manifest.config("atoms", a.atoms);
    manifest.config("seed", a.seed);
    manifest.config("epochs", a.epochs);

    const auto gen = generate(recipe);
    const auto data = expand_problem_to_dataset(gen.problem);

    // realizable runs keep the hypothesis set closed under scaling:
    // l2 = 0 and no clamp
    TrainConfig cfg1;
    cfg1.loss = LossSelector::comp_sum_mu(1.0);
    cfg1.cost = a.cost;
    cfg1.epochs = a.epochs;
    cfg1.batch_size = 16;
    cfg1.learning_rate = 0.5;
    cfg1.seed = a.seed + 1;
    TrainConfig cfg2 = cfg1;
    cfg2.loss = LossSelector::two_stage_phi(MarginFunction::Kind::exponential);
    cfg2.seed = a.seed + 2;

    const auto pair = train_two_stage(data, cfg1, cfg2);
    const double two_stage_risk =
        problem_abstention_risk_two_stage(pair.predictor, pair.rejector, gen.problem);

    // single-stage baseline on the same data, recorded for comparison
    const auto baseline = train_single_stage(data, cfg1);
    const double single_risk = problem_abstention_risk_single(baseline.model, gen.problem);

    save_model(manifest.path("predictor.model"), pair.predictor);
    save_model(manifest.path("rejector.model"), pair.rejector);
    json body = {{"certified_margin", gen.certified_margin},
                 {"two_stage_abstention_loss", two_stage_risk},
                 {"single_stage_abstention_loss", single_risk},
                 {"threshold", 0.01}};
    write_report(manifest.path("realizable.json"), "realizable", body);
    manifest.artifact(manifest.path("realizable.json"));
    manifest.artifact(manifest.path("predictor.model"));
    manifest.artifact(manifest.path("rejector.model"));
    manifest.flush();
    std::cerr << "realizable: two-stage loss " << two_stage_risk
              << " (single-stage baseline " << single_risk << ")\n";
    return two_stage_risk <= 0.01 ? kExitOk : kExitTraining;
}

// ---------------------------------------------------------- finite-sample

struct FiniteSampleArgs {
    std::string recipe = "label_noise";
    double rho = 0.1, delta = 0.05, clamp = 2.0, cost = 0.25, mu = 1.0;
    long m = 500;
    int trials = 40, n = 2, d = 2, atoms = 20;
    std::uint64_t seed = 7;
    int epochs = 120;
    unsigned jobs = 0;
    std::string out = "finite_sample";
};

int cmd_finite_sample(const FiniteSampleArgs& a) {
    if (a.recipe != "label_noise" && a.recipe != "separable_margin" &&
        a.recipe != "chow_stress") {
        std::cerr << "finite-sample: unknown recipe '" << a.recipe << "'\n";
        return kExitConfig;
    }
    SyntheticRecipe recipe;
    recipe.kind = a.recipe == "label_noise"   ? SyntheticRecipe::Kind::label_noise
                  : a.recipe == "chow_stress" ? SyntheticRecipe::Kind::chow_stress
                                              : SyntheticRecipe::Kind::separable_margin;
    recipe.noise = a.rho;
    recipe.n = a.n;
    recipe.d = a.d;
    recipe.c = a.cost;
    recipe.atom_count = a.atoms;
    recipe.seed = a.seed;

    Manifest manifest("finite-sample", a.out);
    manifest.config("recipe", a.recipe);
    manifest.config("rho", a.rho);
    manifest.config("m", a.m);
    manifest.config("delta", a.delta);
    manifest.config("trials", a.trials);
    manifest.config("clamp", a.clamp);
    manifest.config("cost", a.cost);
    manifest.config("mu", a.mu);
    manifest.config("seed", a.seed);
    manifest.config("epochs", a.epochs);

    ValidateBoundConfig cfg;
    cfg.m = a.m;
    cfg.delta = a.delta;
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.workers = a.jobs;
    cfg.erm.loss = LossSelector::comp_sum_mu(a.mu);
    cfg.erm.cost = a.cost;
    cfg.erm.clamp = a.clamp;
    cfg.erm.epochs = a.epochs;
    cfg.erm.batch_size = 32;
    cfg.erm.learning_rate = 0.5;
    cfg.erm.seed = a.seed;

    const auto gen = generate(recipe);
    const auto record = validate_bound(gen.problem, cfg);
    write_report(manifest.path("coverage.json"), "coverage", to_json(record));
    manifest.artifact(manifest.path("coverage.json"));
    manifest.flush();
    std::cerr << "finite-sample: coverage " << record.coverage << " vs threshold "
              << record.threshold << "\n";
    return record.passed ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-based multi-class classification with abstention: training, "
                 "evaluation, and numerical verification of the consistency theory"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Fit a single-stage or two-stage scorer");
    train_cmd->add_option("--csv", train_args.csv, "labeled CSV dataset (header row required)");
    train_cmd->add_option("--label", train_args.label, "label column name")->default_str("y");
    train_cmd->add_option("--problem", train_args.problem,
                          "problem spec file; trains on the exact weighted expansion");
    train_cmd->add_option("--out", train_args.out, "output directory")->default_str("run");
    train_cmd->add_option("--loss", train_args.loss, "single-stage loss family (ce)")
        ->default_str("ce");
    auto* mu_opt =
        train_cmd->add_option("--mu", train_args.mu, "cross-entropy family parameter, >= 0")
            ->default_str("1.0");
    train_cmd->add_flag("--two-stage", train_args.two_stage,
                        "train a predictor, then a rejector against the frozen predictor");
    train_cmd->add_option("--phi", train_args.phi, "two-stage margin function: exp|logistic")
        ->default_str("exp");
    train_cmd->add_option("--cost", train_args.cost, kCostHelp)->default_str("0.1");
    train_cmd->add_option("--model", train_args.model, "model family: linear|mlp")
        ->default_str("linear");
    train_cmd->add_option("--width", train_args.width, "mlp hidden width")->default_str("64");
    train_cmd->add_option("--clamp", train_args.clamp, "score clamp Lambda (0 = none)")
        ->default_str("0");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs, >= 1")
        ->default_str("300");
    train_cmd->add_option("--batch", train_args.batch, "minibatch size, >= 1")
        ->default_str("32");
    train_cmd->add_option("--lr", train_args.lr, "learning rate, > 0")->default_str("0.5");
    train_cmd->add_option("--lr-schedule", train_args.schedule, "constant|cosine")
        ->default_str("constant");
    train_cmd->add_option("--l2", train_args.l2, "L2 coefficient, >= 0")->default_str("0");
    train_cmd->add_option("--seed", train_args.seed, "run seed")->default_str("1");
    std::string train_config;
    train_cmd->add_option("--config", train_config, "JSON config file (flags override)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained model(s) on a dataset");
    eval_cmd->add_option("--model", eval_args.models, "model file (repeat for seed sweeps)");
    eval_cmd->add_option("--csv", eval_args.csv, "labeled CSV dataset");
    eval_cmd->add_option("--label", eval_args.label, "label column name")->default_str("y");
    eval_cmd->add_option("--cost", eval_args.cost,
                         "abstention cost; defaults to each model's provenance")
        ->default_str("-1");
    eval_cmd->add_option("--out", eval_args.out, "output directory")->default_str("eval");

    VerifyArgs verify_args;
    auto* verify_cmd =
        app.add_subcommand("verify", "Run a consistency-bound verification harness");
    verify_cmd->add_option("--theorem", verify_args.theorem,
                           "3.1 | 3.3 | 4.1 | envelope")
        ->default_str("3.1");
    verify_cmd->add_option("--mu", verify_args.mu, "mu list or a:b:step grid")
        ->default_str("0,0.5,1,1.5,2,3");
    verify_cmd->add_option("--cost", verify_args.cost, "cost list")
        ->default_str("0.05,0.25,0.5,0.9");
    verify_cmd->add_option("--n", verify_args.n, "label count list")->default_str("2,3,5");
    verify_cmd->add_option("--phi", verify_args.phi, "margin function for 4.1: exp|logistic")
        ->default_str("exp");
    verify_cmd->add_option("--trials", verify_args.trials, "random trials per cell")
        ->default_str("10000");
    verify_cmd->add_option("--atoms", verify_args.atoms, "atoms per sampled problem")
        ->default_str("5");
    verify_cmd->add_option("--seed", verify_args.seed, "harness seed")->default_str("1");
    verify_cmd->add_option("--jobs", verify_args.jobs,
                           "worker pool size (0 = available parallelism)")
        ->default_str("0");
    verify_cmd->add_flag("--mutate", verify_args.mutate,
                         "sensitivity self-test: halve the transform value; violations are "
                         "expected and reported via exit code 5");
    verify_cmd->add_option("--stress", verify_args.stress,
                           "fraction of draws placed near the tight region")
        ->default_str("0.1");
    verify_cmd->add_option("--out", verify_args.out, "output directory")->default_str("verify");

    GapsArgs gaps_args;
    auto* gaps_cmd =
        app.add_subcommand("gaps", "Minimizability-gap sweeps and the bounded-score demo");
    gaps_cmd->add_option("--mu-grid", gaps_args.mu_grid, "mu grid a:b:step or list")
        ->default_str("0:4:0.1");
    gaps_cmd->add_option("--cost", gaps_args.cost, "cost list")->default_str("0.5");
    gaps_cmd->add_option("--demo", gaps_args.demo, "named demo: appendix-f");
    gaps_cmd->add_option("--lambda", gaps_args.lambda, "score bound for the demo")
        ->default_str("2");
    gaps_cmd->add_option("--eta", gaps_args.eta, "conditional probability for the demo")
        ->default_str("1");
    gaps_cmd->add_option("--out", gaps_args.out, "output directory")->default_str("gaps");

    RealizableArgs rl_args;
    auto* rl_cmd = app.add_subcommand("realizable",
                                      "Two-stage training on certified-margin separable data");
    rl_cmd->add_option("--n", rl_args.n, "classes")->default_str("3");
    rl_cmd->add_option("--d", rl_args.d, "feature dimension")->default_str("2");
    rl_cmd->add_option("--gamma", rl_args.gamma, "required margin, > 0")->default_str("0.5");
    rl_cmd->add_option("--atoms", rl_args.atoms, "atom count")->default_str("60");
    rl_cmd->add_option("--cost", rl_args.cost, kCostHelp)->default_str("0.2");
    rl_cmd->add_option("--seed", rl_args.seed, "recipe seed")->default_str("7");
    rl_cmd->add_option("--epochs", rl_args.epochs, "epochs per stage")->default_str("400");
    rl_cmd->add_option("--out", rl_args.out, "output directory")->default_str("realizable");

    FiniteSampleArgs fs_args;
    auto* fs_cmd = app.add_subcommand("finite-sample",
                                      "Coverage validation of the finite-sample guarantee");
    fs_cmd->add_option("--recipe", fs_args.recipe,
                       "label_noise | separable_margin | chow_stress")
        ->default_str("label_noise");
    fs_cmd->add_option("--rho", fs_args.rho, "label flip probability")->default_str("0.1");
    fs_cmd->add_option("--m", fs_args.m, "sample size per trial")->default_str("500");
    fs_cmd->add_option("--delta", fs_args.delta, "confidence parameter in (0,1)")
        ->default_str("0.05");
    fs_cmd->add_option("--trials", fs_args.trials, "validation trials, >= 20")
        ->default_str("40");
    fs_cmd->add_option("--clamp", fs_args.clamp, "score clamp Lambda, > 0 required")
        ->default_str("2");
    fs_cmd->add_option("--cost", fs_args.cost, kCostHelp)->default_str("0.25");
    fs_cmd->add_option("--mu", fs_args.mu, "surrogate family parameter")->default_str("1");
    fs_cmd->add_option("--n", fs_args.n, "classes")->default_str("2");
    fs_cmd->add_option("--atoms", fs_args.atoms, "atom count")->default_str("20");
    fs_cmd->add_option("--epochs", fs_args.epochs, "ERM epochs per trial")->default_str("120");
    fs_cmd->add_option("--seed", fs_args.seed, "harness seed")->default_str("7");
    fs_cmd->add_option("--jobs", fs_args.jobs, "worker pool size")->default_str("0");
    fs_cmd->add_option("--out", fs_args.out, "output directory")->default_str("finite_sample");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = inject_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*train_cmd) {
            train_args.mu_given = mu_opt->count() > 0;
            return cmd_train(train_args);
        }
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*verify_cmd) return cmd_verify(verify_args);
        if (*gaps_cmd) return cmd_gaps(gaps_args);
        if (*rl_cmd) return cmd_realizable(rl_args);
        if (*fs_cmd) return cmd_finite_sample(fs_args);
    } catch (const TrainingError& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
