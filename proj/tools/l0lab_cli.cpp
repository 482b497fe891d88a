// l0lab: Monte Carlo laboratory for binary classification under l0 attacks.
//
// Subcommands:
//   fisher          print Fisher information, normalizer and truncation radius
//   audit           numerical audit of the noise regularity assumptions (JSON)
//   standard-error  Bayes error with no adversary
//   robust          robust error under a worst-case or coupling adversary
//   sweep           grid over dimensions x budget exponents, CSV/JSON rows
//   attack-demo     single-trial trace of an attack

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l0lab/l0lab.hpp"

namespace {

std::vector<double> parse_poly(const std::string& text) {
    std::vector<double> coeffs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            coeffs.push_back(std::stod(item, &pos));
            while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument("--poly entry '" + item + "' is not a number");
        }
    }
    if (coeffs.empty()) throw std::invalid_argument("--poly must list coefficients b0,b1,...,bm");
    return coeffs;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("--out path '" + path + "' is not writable");
    out << content;
}

void dump_datasets_csv(const std::string& path, const l0lab::ProblemInstance& instance,
                       std::uint64_t cell_seed, std::size_t trials) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("--dump-data path '" + path + "' is not writable");
    for (std::size_t t = 0; t < trials; ++t) {
        l0lab::RandomStream stream(cell_seed, t);
        const l0lab::LabeledDataset data = l0lab::generate(instance, std::nullopt, stream);
        out << data.label;
        char buf[64];
        for (double x : data.samples) {
            std::snprintf(buf, sizeof(buf), ",%.17g", x);
            out << buf;
        }
        out << '\n';
    }
}

struct CommonOptions {
    std::string poly = "0,0,-0.5";
    double c = 1.0;
    std::uint64_t seed = 0;
    std::size_t trials = 20000;
    std::string out;
    std::string format = "csv";
    std::string config_path;
    std::size_t workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--poly", opt.poly, "psi coefficients b0,b1,...,bm (leading must be negative)");
    cmd->add_option("--c", opt.c, "signal constant; mu = c / sqrt(d)");
    cmd->add_option("--seed", opt.seed, "master seed");
    cmd->add_option("--trials", opt.trials, "Monte Carlo trials per cell");
    cmd->add_option("--out", opt.out, "output path (default stdout)");
    cmd->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--config", opt.config_path, "JSON config file; explicit flags win");
    cmd->add_option("--workers", opt.workers, "worker threads (0 = auto; L0LAB_WORKERS caps)");
}

/// Apply JSON config values for options the user did not set on the command
/// line. Unknown keys are rejected so typos do not silently disappear.
void apply_config_file(CLI::App* cmd, CommonOptions& opt, std::vector<std::size_t>& dims,
                       std::vector<double>& alphas, std::vector<std::size_t>& ks,
                       std::string& attack, std::string& classifier, std::size_t& d,
                       std::size_t& k, double& alpha) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path);
    if (!in) throw std::invalid_argument("--config path '" + opt.config_path + "' is not readable");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("--config file is not valid JSON: " + std::string(e.what()));
    }
    auto unset = [&](const std::string& flag) {
        const CLI::Option* o = cmd->get_option_no_throw(flag);
        return o != nullptr && o->count() == 0;
    };
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "poly" && unset("--poly")) {
                std::string joined;
                for (const auto& v : value) {
                    if (!joined.empty()) joined += ',';
                    joined += std::to_string(v.get<double>());
                }
                opt.poly = joined;
            } else if (key == "c" && unset("--c")) opt.c = value.get<double>();
            else if (key == "seed" && unset("--seed")) opt.seed = value.get<std::uint64_t>();
            else if (key == "trials" && unset("--trials")) opt.trials = value.get<std::size_t>();
            else if (key == "out" && unset("--out")) opt.out = value.get<std::string>();
            else if (key == "format" && unset("--format")) opt.format = value.get<std::string>();
            else if (key == "workers" && unset("--workers")) opt.workers = value.get<std::size_t>();
            else if (key == "dims" && unset("--dims")) dims = value.get<std::vector<std::size_t>>();
            else if (key == "alphas" && unset("--alphas")) alphas = value.get<std::vector<double>>();
            else if (key == "ks" && unset("--ks")) ks = value.get<std::vector<std::size_t>>();
            else if (key == "attack" && unset("--attack")) attack = value.get<std::string>();
            else if (key == "classifier" && unset("--classifier")) classifier = value.get<std::string>();
            else if (key == "d" && unset("--d")) d = value.get<std::size_t>();
            else if (key == "k" && unset("--k")) k = value.get<std::size_t>();
            else if (key == "alpha" && unset("--alpha")) alpha = value.get<double>();
            else if (key == "poly" || key == "c" || key == "seed" || key == "trials" ||
                     key == "out" || key == "format" || key == "workers" || key == "dims" ||
                     key == "alphas" || key == "ks" || key == "attack" || key == "classifier" ||
                     key == "d" || key == "k" || key == "alpha") {
                // flag explicitly set; config value ignored
            } else {
                throw std::invalid_argument("--config contains unknown key '" + key + "'");
            }
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument("--config key '" + key + "' has the wrong type");
        }
    }
}

std::string single_cell_output(const CommonOptions& opt, const l0lab::ExperimentConfig& config,
                               const l0lab::CellResult& row) {
    if (opt.format == "json") return l0lab::to_json_report(config, {row});
    return l0lab::to_csv({row});
}

l0lab::ExperimentConfig make_config(const CommonOptions& opt) {
    l0lab::ExperimentConfig config;
    config.poly = parse_poly(opt.poly);
    config.c = opt.c;
    config.trials = opt.trials;
    config.master_seed = opt.seed;
    config.workers = opt.workers;
    config.out_path = opt.out;
    config.format = opt.format == "json" ? l0lab::OutputFormat::json : l0lab::OutputFormat::csv;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for binary classification under l0 attacks"};
    app.require_subcommand(1);

    // fisher
    CommonOptions fisher_opt;
    CLI::App* fisher = app.add_subcommand("fisher", "print I_q, A and the truncation radius R");
    add_common(fisher, fisher_opt);

    // audit
    CommonOptions audit_opt;
    audit_opt.trials = 1000;
    double audit_zeta = 0.5;
    std::size_t audit_d_probe = 4096;
    CLI::App* audit = app.add_subcommand("audit", "numerical audit of the noise assumptions (JSON)");
    add_common(audit, audit_opt);
    audit->add_option("--zeta", audit_zeta, "half-width of the local supremum window")
        ->check(CLI::PositiveNumber);
    audit->add_option("--d-probe", audit_d_probe, "dimension used for the max-score probe");

    // standard-error
    CommonOptions std_opt;
    std::size_t std_d = 4096;
    std::string std_dump;
    CLI::App* std_err = app.add_subcommand("standard-error", "Bayes error with no adversary");
    add_common(std_err, std_opt);
    std_err->add_option("--d", std_d, "dimension")->check(CLI::PositiveNumber);
    std_err->add_option("--dump-data", std_dump, "also dump the generated datasets to CSV");

    // robust
    CommonOptions rob_opt;
    std::size_t rob_d = 4096;
    std::size_t rob_k = 0;
    double rob_alpha = 0.0;
    std::string rob_attack = "worst_case";
    std::string rob_classifier = "truncated";
    std::string rob_dump;
    CLI::App* robust = app.add_subcommand("robust", "robust error under an adversary");
    add_common(robust, rob_opt);
    robust->add_option("--d", rob_d, "dimension")->check(CLI::PositiveNumber);
    robust->add_option("--k", rob_k, "l0 budget");
    robust->add_option("--alpha", rob_alpha, "budget exponent, k = floor(d^alpha)");
    robust->add_option("--attack", rob_attack, "worst_case or coupling");
    robust->add_option("--classifier", rob_classifier, "ml or truncated");
    robust->add_option("--dump-data", rob_dump, "also dump the generated datasets to CSV");

    // sweep
    CommonOptions sweep_opt;
    std::vector<std::size_t> sweep_dims;
    std::vector<double> sweep_alphas;
    std::vector<std::size_t> sweep_ks;
    std::string sweep_attack = "none";
    std::string sweep_classifier = "truncated";
    CLI::App* sweep = app.add_subcommand("sweep", "grid over dims x alphas (or ks)");
    add_common(sweep, sweep_opt);
    sweep->add_option("--dims", sweep_dims, "dimensions, comma separated")->delimiter(',');
    sweep->add_option("--alphas", sweep_alphas, "budget exponents in (0,1)")->delimiter(',');
    sweep->add_option("--ks", sweep_ks, "explicit budgets (alternative to --alphas)")->delimiter(',');
    sweep->add_option("--attack", sweep_attack, "none, worst_case or coupling");
    sweep->add_option("--classifier", sweep_classifier, "ml or truncated");

    // attack-demo
    CommonOptions demo_opt;
    std::size_t demo_d = 8;
    std::size_t demo_k = 1;
    int demo_label = 1;
    std::string demo_attack = "worst_case";
    CLI::App* demo = app.add_subcommand("attack-demo", "single-trial attack trace");
    add_common(demo, demo_opt);
    demo->add_option("--d", demo_d, "dimension (kept small for readability)")->check(CLI::PositiveNumber);
    demo->add_option("--k", demo_k, "l0 budget");
    demo->add_option("--label", demo_label, "true label, -1 or +1")->check(CLI::IsMember({-1, 1}));
    demo->add_option("--attack", demo_attack, "worst_case or coupling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.get_name() << ": " << e.what() << "\n";
        return 2;
    }

    try {
        std::vector<std::size_t> no_dims;
        std::vector<double> no_alphas;
        std::vector<std::size_t> no_ks;
        std::string no_attack, no_classifier;
        std::size_t no_d = 0, no_k = 0;
        double no_alpha = 0.0;

        if (fisher->parsed()) {
            apply_config_file(fisher, fisher_opt, no_dims, no_alphas, no_ks, no_attack,
                              no_classifier, no_d, no_k, no_alpha);
            const l0lab::ExpPolyNoise noise = l0lab::new_exp_poly(parse_poly(fisher_opt.poly));
            char buf[256];
            std::snprintf(buf, sizeof(buf), "I_q = %.6f\nA = %.6f\nR = %.6f\n",
                          noise.fisher_information(), noise.normalizer(),
                          noise.truncation_radius());
            write_output(fisher_opt.out, buf);
        } else if (audit->parsed()) {
            apply_config_file(audit, audit_opt, no_dims, no_alphas, no_ks, no_attack,
                              no_classifier, no_d, no_k, no_alpha);
            const l0lab::ExpPolyNoise noise = l0lab::new_exp_poly(parse_poly(audit_opt.poly));
            const l0lab::AuditReport report =
                noise.audit_assumptions(audit_zeta, audit_d_probe, audit_opt.trials, audit_opt.seed);
            nlohmann::json j;
            j["zeta"] = report.zeta;
            j["a2_value"] = report.a2_value;
            j["a3_value"] = report.a3_value;
            j["a4_gamma"] = report.a4_gamma;
            j["a4_c4"] = report.a4_c4;
            j["a4_empirical_exceed_rate"] = report.a4_empirical_exceed_rate;
            j["fisher_finite"] = report.fisher_finite;
            j["d_probe"] = audit_d_probe;
            j["trials"] = audit_opt.trials;
            j["seed"] = audit_opt.seed;
            write_output(audit_opt.out, j.dump(2) + "\n");
        } else if (std_err->parsed()) {
            apply_config_file(std_err, std_opt, no_dims, no_alphas, no_ks, no_attack,
                              no_classifier, std_d, no_k, no_alpha);
            l0lab::ExperimentConfig config = make_config(std_opt);
            config.attack = l0lab::AttackKind::none;
            config.classifier = l0lab::ClassifierKind::ml;
            config.dims = {std_d};
            config.validate();
            const l0lab::ExpPolyNoise noise = l0lab::new_exp_poly(config.poly);
            const l0lab::CellResult row = l0lab::estimate_standard_error(
                noise, config.c, std_d, config.trials, config.master_seed, config.workers);
            if (!std_dump.empty()) {
                const l0lab::ProblemInstance instance(std_d, config.c, noise);
                dump_datasets_csv(std_dump, instance, row.seed, config.trials);
            }
            write_output(std_opt.out, single_cell_output(std_opt, config, row));
        } else if (robust->parsed()) {
            apply_config_file(robust, rob_opt, no_dims, no_alphas, no_ks, rob_attack,
                              rob_classifier, rob_d, rob_k, rob_alpha);
            l0lab::ExperimentConfig config = make_config(rob_opt);
            config.attack = l0lab::attack_from_string(rob_attack);
            config.classifier = l0lab::classifier_from_string(rob_classifier);
            config.dims = {rob_d};
            config.validate();
            std::optional<double> alpha;
            std::size_t k = rob_k;
            if (rob_alpha != 0.0) {
                const l0lab::AttackBudget budget = l0lab::budget_from_alpha(rob_d, rob_alpha);
                k = budget.k;
                alpha = rob_alpha;
            }
            const l0lab::ExpPolyNoise noise = l0lab::new_exp_poly(config.poly);
            const l0lab::CellResult row =
                l0lab::estimate_robust_error(noise, config.c, rob_d, k, alpha, config.classifier,
                                             config.attack, config.trials, config.master_seed,
                                             config.workers);
            if (!rob_dump.empty()) {
                const l0lab::ProblemInstance instance(rob_d, config.c, noise);
                dump_datasets_csv(rob_dump, instance, row.seed, config.trials);
            }
            write_output(rob_opt.out, single_cell_output(rob_opt, config, row));
        } else if (sweep->parsed()) {
            apply_config_file(sweep, sweep_opt, sweep_dims, sweep_alphas, sweep_ks, sweep_attack,
                              sweep_classifier, no_d, no_k, no_alpha);
            l0lab::ExperimentConfig config = make_config(sweep_opt);
            config.dims = sweep_dims;
            config.alphas = sweep_alphas;
            config.ks = sweep_ks;
            config.attack = l0lab::attack_from_string(sweep_attack);
            config.classifier = l0lab::classifier_from_string(sweep_classifier);
            config.validate();
            const l0lab::ExpPolyNoise noise = l0lab::new_exp_poly(config.poly);
            const std::vector<l0lab::CellResult> rows = l0lab::phase_sweep(noise, config);
            write_output(sweep_opt.out, config.format == l0lab::OutputFormat::json
                                            ? l0lab::to_json_report(config, rows)
                                            : l0lab::to_csv(rows));
        } else if (demo->parsed()) {
            apply_config_file(demo, demo_opt, no_dims, no_alphas, no_ks, demo_attack,
                              no_classifier, demo_d, demo_k, no_alpha);
            const l0lab::ExpPolyNoise noise = l0lab::new_exp_poly(parse_poly(demo_opt.poly));
            const l0lab::ProblemInstance instance(demo_d, demo_opt.c, noise);
            l0lab::RandomStream stream(demo_opt.seed, 0);
            const l0lab::LabeledDataset data = l0lab::generate(instance, demo_label, stream);
            const std::vector<double> scores = l0lab::loglik_transform(instance, data.samples);
            std::ostringstream os;
            os.setf(std::ios::fixed);
            os.precision(4);
            os << "label: " << data.label << "\n";
            os << "x:";
            for (double v : data.samples) os << ' ' << v;
            os << "\nscores:";
            for (double v : scores) os << ' ' << v;
            if (2 * demo_k < demo_d)
                os << "\nTSum_" << demo_k << "(scores): " << l0lab::tsum(scores, demo_k);
            os << "\n";
            if (demo_attack == "worst_case") {
                const l0lab::Direction dir =
                    data.label == 1 ? l0lab::Direction::minimize : l0lab::Direction::maximize;
                auto [value, outcome] = l0lab::worst_case_tsum(scores, demo_k, dir);
                os << "attack: worst_case (" << (data.label == 1 ? "minimize" : "maximize")
                   << ")\nchanged score indices:";
                for (std::size_t i : outcome.changed_indices) os << ' ' << i;
                os << "\nperturbed scores:";
                for (double v : outcome.perturbed) os << ' ' << v;
                os << "\nextremal TSum_" << demo_k << ": " << value << "\n";
                const std::vector<double> realized =
                    l0lab::realize_worst_case(instance, data.samples, demo_k, dir);
                os << "realized x':";
                for (double v : realized) os << ' ' << v;
                os << "\n";
            } else if (demo_attack == "coupling") {
                const l0lab::AttackOutcome outcome =
                    l0lab::coupling_attack(instance, data, demo_k, stream);
                os << "attack: coupling\nchanged indices:";
                for (std::size_t i : outcome.changed_indices) os << ' ' << i;
                os << "\nreverted: " << (outcome.reverted ? "yes" : "no") << "\nx':";
                for (double v : outcome.perturbed) os << ' ' << v;
                if (2 * demo_k < demo_d) {
                    const std::vector<double> attacked_scores =
                        l0lab::loglik_transform(instance, outcome.perturbed);
                    os << "\nTSum_" << demo_k << "(attacked scores): "
                       << l0lab::tsum(attacked_scores, demo_k);
                }
                os << "\n";
            } else {
                throw std::invalid_argument("--attack must be worst_case or coupling, got '" +
                                            demo_attack + "'");
            }
            write_output(demo_opt.out, os.str());
        }
    } catch (const l0lab::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
