#include "grtm/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "grtm/baselines.hpp"
#include "grtm/errors.hpp"
#include "grtm/eval.hpp"
#include "grtm/generator.hpp"
#include "grtm/inference.hpp"
#include "grtm/io.hpp"
#include "grtm/linkpredict.hpp"

namespace grtm {

namespace fs = std::filesystem;

namespace {

constexpr const char* kUsage =
    "usage: grtm <command> [options]\n"
    "\n"
    "commands:\n"
    "  simulate   sample a synthetic corpus, links and ground truth\n"
    "  fit        fit the model to features and links\n"
    "  predict    rank link candidates for one user\n"
    "  eval       split links, score held-out pairs, write ROC/PR reports\n"
    "  topics     list the most probable images of every topic\n"
    "\n"
    "Run `grtm <command> --help` for the options of a command. Every option may\n"
    "also be given as key=value in a file passed with --config.\n";

// Help exits 0; any other parse or validation failure is a usage error.
int parse_failure(const CLI::App& app, const CLI::ParseError& e, std::ostream& out, std::ostream& err)
{
    return app.exit(e, out, err) == 0 ? 0 : 2;
}

// Shared fitting options.
struct FitFlags {
    int k = 100;
    double alpha = 2.0;
    double rho = 1.0;
    std::string cov = "diag";
    std::uint64_t seed = 0;
    int max_iters = 500;
    double tol = 1e-5;
    std::string init = "kmeans_pp";
    std::string eta_offset = "outside";
    int log_every = 0;

    void add_to(CLI::App& app)
    {
        app.add_option("--k", k, "number of topics")->check(CLI::PositiveNumber)->capture_default_str();
        app.add_option("--alpha", alpha, "Dirichlet concentration")->check(CLI::PositiveNumber)->capture_default_str();
        app.add_option("--rho", rho, "pseudo-count weight for unobserved negatives")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        app.add_option("--cov", cov, "covariance form")->check(CLI::IsMember({"diag", "full"}))->capture_default_str();
        app.add_option("--seed", seed, "random seed")->capture_default_str();
        app.add_option("--max-iters", max_iters, "maximum coordinate ascent sweeps")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app.add_option("--tol", tol, "relative bound change that stops the fit (0 runs every sweep)")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        app.add_option("--init", init, "initialization")
            ->check(CLI::IsMember({"kmeans_pp", "random"}))
            ->capture_default_str();
        app.add_option("--eta-offset", eta_offset, "placement of nu in the eta update")
            ->check(CLI::IsMember({"inside", "outside"}))
            ->capture_default_str();
        app.add_option("--log-every", log_every, "progress line every n sweeps (0 disables)")->capture_default_str();
    }

    FitConfig config(std::ostream& err) const
    {
        FitConfig cfg;
        cfg.hyperparams.num_topics = k;
        cfg.hyperparams.alpha = alpha;
        cfg.hyperparams.rho = rho;
        cfg.hyperparams.cov_kind = cov == "full" ? CovKind::full : CovKind::diagonal;
        cfg.hyperparams.seed = seed;
        cfg.hyperparams.max_iters = max_iters;
        cfg.hyperparams.elbo_rel_tol = tol;
        cfg.init_strategy = init == "random" ? InitStrategy::random_assign : InitStrategy::kmeans_pp;
        cfg.eta_offset = eta_offset == "inside" ? EtaOffset::inside_log : EtaOffset::outside_log;
        cfg.log_every = log_every;
        cfg.log = &err;
        return cfg;
    }
};

void configure(CLI::App& app)
{
    app.set_config("--config", "", "flat key=value file mirroring the options");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_help_flag("-h,--help", "print this help");
}

void require_valid(const Corpus& corpus, const LinkSet& links)
{
    const auto violations = validate(corpus, links);
    if (!violations.empty()) {
        std::string msg = "invalid inputs:";
        for (const auto& v : violations) {
            msg += "\n  " + v;
        }
        throw ContractError(msg);
    }
}

fs::path with_suffix(const fs::path& p, const std::string& suffix)
{
    fs::path out = p;
    out += suffix;
    return out;
}

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app {"Sample a synthetic corpus, links and ground truth", "grtm simulate"};
    configure(app);
    GenConfig cfg;
    std::vector<double> eta {6.0};
    std::string out_dir;
    app.add_option("--users", cfg.num_users, "number of users")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--images-min", cfg.images_min, "fewest images per user")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--images-max", cfg.images_max, "most images per user")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--k", cfg.num_topics, "number of planted topics")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--dim", cfg.feature_dim, "feature dimension")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--alpha", cfg.alpha, "Dirichlet concentration of topic proportions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--separation", cfg.separation, "minimum distance between planted means, in sigma")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--sigma", cfg.sigma, "per-dimension standard deviation")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--eta", eta, "link weights: one value for every topic, or K values")->delimiter(',');
    app.add_option("--nu", cfg.nu_true, "link offset")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--out-dir", out_dir, "output directory")->required();
    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        return parse_failure(app, e, out, err);
    }
    if (cfg.images_max < cfg.images_min) {
        err << "error: --images-max must be at least --images-min\n";
        return 2;
    }
    if (eta.size() == 1) {
        cfg.eta_true = Vector::Constant(cfg.num_topics, eta.front());
    } else if (static_cast<int>(eta.size()) == cfg.num_topics) {
        cfg.eta_true = Eigen::Map<const Vector>(eta.data(), cfg.num_topics);
    } else {
        err << "error: --eta needs 1 or " << cfg.num_topics << " values, got " << eta.size() << '\n';
        return 2;
    }

    const Sample s = sample_corpus(cfg);
    fs::create_directories(out_dir);
    save_features(s.corpus, fs::path(out_dir) / "features.bin");
    save_links(s.links, fs::path(out_dir) / "links.txt");
    save_ground_truth(s.truth, fs::path(out_dir) / "truth.json");
    out << "users=" << s.corpus.num_users() << " dim=" << cfg.feature_dim << " topics=" << cfg.num_topics
        << " images=" << s.corpus.total_images() << " links=" << s.links.size() << '\n';
    return 0;
}

int cmd_fit(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app {"Fit the model to features and links", "grtm fit"};
    configure(app);
    FitFlags flags;
    flags.add_to(app);
    std::string features;
    std::string links_path;
    std::string model_path;
    double train_ratio = 0.0;
    bool no_phi = false;
    app.add_option("--features", features, "feature file (binary or CSV)")->required();
    app.add_option("--links", links_path, "link file")->required();
    app.add_option("--model", model_path, "output model file")->required();
    auto* ratio = app.add_option("--train-ratio", train_ratio, "split links and fit on this fraction")
                      ->check(CLI::Range(0.0, 1.0));
    app.add_flag("--no-phi", no_phi, "store only per-user usage, not full responsibilities");
    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        return parse_failure(app, e, out, err);
    }

    const Corpus corpus = load_features(features);
    LinkSet train = load_links(links_path);
    require_valid(corpus, train);
    if (ratio->count() > 0) {
        const SplitResult split = split_links(train, train_ratio, flags.seed);
        save_links(split.train, with_suffix(model_path, ".train.links"));
        save_links(split.test, with_suffix(model_path, ".test.links"));
        train = split.train;
    }
    const FittedModel model = fit(corpus, train, flags.config(err));
    save_model(model, model_path, !no_phi);
    out << "sweeps=" << model.elbo_trace.size() - 1 << " elbo=" << format_real(model.elbo_trace.back())
        << " train_links=" << train.size() << '\n';
    return 0;
}

int cmd_predict(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app {"Rank link candidates for one user", "grtm predict"};
    configure(app);
    std::string model_path;
    std::string exclude_path;
    int user = 0;
    int top_n = 10;
    app.add_option("--model", model_path, "model file")->required();
    app.add_option("--user", user, "user id")->required();
    app.add_option("--top-n", top_n, "number of candidates")->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--links", exclude_path, "links to exclude from the ranking (usually the training links)");
    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        return parse_failure(app, e, out, err);
    }

    const FittedModel model = load_model(model_path);
    if (user < 0 || user >= model.num_users()) {
        err << "error: unknown user " << user << "; valid ids are 0.." << model.num_users() - 1 << '\n';
        return 1;
    }
    const LinkSet exclude = exclude_path.empty() ? LinkSet {} : load_links(exclude_path);
    const auto ranked = rank_candidates(model, user, exclude, top_n);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        out << i + 1 << ' ' << ranked[i].user << ' ' << format_real(ranked[i].score) << '\n';
    }
    return 0;
}

int cmd_eval(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app {"Split links, score held-out pairs and write ROC/PR reports", "grtm eval"};
    configure(app);
    FitFlags flags;
    flags.add_to(app);
    std::string features;
    std::string links_path;
    std::string model_path;
    std::string out_dir;
    std::string method = "grtm";
    double train_ratio = 0.6;
    int clusters = 0;
    app.add_option("--features", features, "feature file (binary or CSV)")->required();
    app.add_option("--links", links_path, "all links")->required();
    app.add_option("--method", method, "scoring method")
        ->check(CLI::IsMember({"grtm", "mean", "boft"}))
        ->capture_default_str();
    app.add_option("--model", model_path, "fitted model to score with (grtm); fitted on the split when omitted");
    app.add_option("--train-ratio", train_ratio, "fraction of links used for training")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_option("--clusters", clusters, "image clusters for boft (defaults to --k)")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "report directory")->required();
    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        return parse_failure(app, e, out, err);
    }

    const Corpus corpus = load_features(features);
    const LinkSet links = load_links(links_path);
    require_valid(corpus, links);
    const SplitResult split = split_links(links, train_ratio, flags.seed);
    const int n = corpus.num_users();

    std::vector<ScoredPair> scores;
    if (method == "grtm") {
        FittedModel model;
        if (!model_path.empty()) {
            model = load_model(model_path);
            if (model.num_users() != n) {
                throw ContractError("model covers " + std::to_string(model.num_users()) + " users, features have " +
                                    std::to_string(n));
            }
        } else {
            model = fit(corpus, split.train, flags.config(err));
        }
        for (const auto& e : evaluation_universe(n, split.train)) {
            scores.push_back({e, link_log_score(model.usage[e.first], model.usage[e.second], model.link)});
        }
    } else {
        BaselineParams params;
        params.num_clusters = clusters > 0 ? clusters : flags.k;
        params.seed = flags.seed;
        const auto method_kind = method == "mean" ? BaselineMethod::mean : BaselineMethod::boft;
        for (const auto& ps : baseline_scores(corpus, method_kind, params, &err)) {
            scores.push_back({Edge {ps.u, ps.v}, ps.score});
        }
    }

    const EvalReport report = evaluate(scores, split, n);
    export_report(report, out_dir);
    out << read_file(fs::path(out_dir) / "summary.txt");
    return 0;
}

int cmd_topics(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app {"List the most probable images of every topic", "grtm topics"};
    configure(app);
    std::string model_path;
    std::string features;
    int per_topic = 5;
    app.add_option("--model", model_path, "model file")->required();
    app.add_option("--features", features, "feature file (binary or CSV)")->required();
    app.add_option("--per-topic", per_topic, "images listed per topic")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        return parse_failure(app, e, out, err);
    }

    const FittedModel model = load_model(model_path);
    const Corpus corpus = load_features(features);
    const auto d = model.topics.means.empty() ? 0 : model.topics.means.front().size();
    if (corpus.feature_dim != d) {
        throw ContractError("feature dimension " + std::to_string(corpus.feature_dim) +
                            " does not match the model's " + std::to_string(d));
    }

    struct Entry {
        int user;
        int image;
        double log_density;
    };
    out << "topic rank user image log_density\n";
    for (int k = 0; k < model.num_topics(); ++k) {
        std::vector<Entry> entries;
        for (const auto& user : corpus.users) {
            for (int n = 0; n < user.size(); ++n) {
                entries.push_back({user.user_id, n,
                                   gaussian_log_density(user.images[n], model.topics.means[k],
                                                        model.topics.covariances[k])});
            }
        }
        const auto keep = std::min<std::size_t>(entries.size(), static_cast<std::size_t>(per_topic));
        std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(),
                          [](const Entry& a, const Entry& b) {
                              if (a.log_density != b.log_density) {
                                  return a.log_density > b.log_density;
                              }
                              return std::pair(a.user, a.image) < std::pair(b.user, b.image);
                          });
        for (std::size_t r = 0; r < keep; ++r) {
            out << k << ' ' << r + 1 << ' ' << entries[r].user << ' ' << entries[r].image << ' '
                << format_real(entries[r].log_density) << '\n';
        }
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    if (args.size() < 2 || args[1] == "-h" || args[1] == "--help") {
        (args.size() < 2 ? err : out) << kUsage;
        return args.size() < 2 ? 2 : 0;
    }
    const std::string& command = args[1];
    // CLI11 consumes a reversed argument vector without the program name.
    const std::vector<std::string> rest(args.begin() + 2, args.end());
    try {
        if (command == "simulate") {
            return cmd_simulate(rest, out, err);
        }
        if (command == "fit") {
            return cmd_fit(rest, out, err);
        }
        if (command == "predict") {
            return cmd_predict(rest, out, err);
        }
        if (command == "eval") {
            return cmd_eval(rest, out, err);
        }
        if (command == "topics") {
            return cmd_topics(rest, out, err);
        }
        err << "error: unknown command '" << command << "'\n\n" << kUsage;
        return 2;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace grtm
