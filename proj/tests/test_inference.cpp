#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "grtm/errors.hpp"
#include "grtm/generator.hpp"
#include "grtm/inference.hpp"
#include "grtm/linkpredict.hpp"
#include "helpers.hpp"

using namespace grtm;
using namespace grtm::testing;

namespace {

Corpus two_clouds(int per_cloud, double gap, std::uint64_t seed, std::vector<Vector>* centroids = nullptr)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Corpus c;
    c.feature_dim = 2;
    Vector sum_a = Vector::Zero(2), sum_b = Vector::Zero(2);
    for (int u = 0; u < 4; ++u) {
        UserCollection user{u, {}};
        for (int i = 0; i < per_cloud / 2; ++i) {
            const bool far = (u + i) % 2 == 0;
            Vector x(2);
            x << noise(rng) + (far ? gap : 0.0), noise(rng);
            (far ? sum_b : sum_a) += x;
            user.images.push_back(x);
        }
        c.users.push_back(user);
    }
    if (centroids) {
        *centroids = {sum_a / per_cloud, sum_b / per_cloud};
    }
    return c;
}

FitConfig quiet_config(int k, std::uint64_t seed)
{
    FitConfig cfg;
    cfg.hyperparams.num_topics = k;
    cfg.hyperparams.seed = seed;
    cfg.hyperparams.max_iters = 30;
    return cfg;
}

Sample small_sample(std::uint64_t seed, int users = 16)
{
    GenConfig g;
    g.num_users = users;
    g.images_min = 5;
    g.images_max = 12;
    g.num_topics = 3;
    g.feature_dim = 4;
    g.alpha = 0.5;
    g.separation = 6.0;
    g.eta_true = vec({8, 8, 8});
    g.nu_true = -3.0;
    g.seed = seed;
    Sample s = sample_corpus(g);
    if (s.links.empty()) {
        s.links.insert(0, 1);
    }
    return s;
}

} // namespace

TEST_SUITE("inference")
{
    TEST_CASE("responsibility update matches the straight-line formula")
    {
        const auto t = tiny_instance();
        for (int u = 0; u < 2; ++u) {
            const Matrix got = update_phi(t.corpus, t.state, t.topics, t.link, t.train, u);
            const Matrix want = oracle_phi(t, u);
            REQUIRE(got.rows() == want.rows());
            CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
        }
    }

    TEST_CASE("responsibility update edge cases")
    {
        auto t = tiny_instance();
        SUBCASE("single topic")
        {
            TopicParams one{{vec({0, 0})}, {Covariance::identity(2)}};
            LinkModel lm{vec({0.5}), -1.0};
            const Matrix phi = update_phi(t.corpus.users[0], vec({3.0}), one, lm, {1}, {vec({1.0}), vec({1.0})});
            CHECK(phi == Matrix::Ones(2, 1));
        }
        SUBCASE("identical topics, symmetric gamma, no links")
        {
            TopicParams same{{vec({0.5, 0.5}), vec({0.5, 0.5}), vec({0.5, 0.5})},
                             {Covariance::identity(2), Covariance::identity(2), Covariance::identity(2)}};
            const Matrix phi = update_phi(t.corpus.users[0], vec({2, 2, 2}), same, LinkModel{vec({1, 2, 3}), -1}, {}, {});
            CHECK((phi.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
        }
        SUBCASE("user without images")
        {
            const Matrix phi = update_phi(UserCollection{0, {}}, vec({1, 1}), t.topics, t.link, {1},
                                          {vec({0.5, 0.5}), vec({0.4, 0.6})});
            CHECK(phi.rows() == 0);
        }
        SUBCASE("gamma of the wrong length")
        {
            CHECK_THROWS_AS(update_phi(t.corpus.users[0], vec({1, 1, 1}), t.topics, t.link, {}, {}), ContractError);
        }
    }

    TEST_CASE("responsibility rows are simplex points on random inputs")
    {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> normal(0.0, 3.0);
        std::uniform_real_distribution<double> pos(0.2, 5.0);
        for (int trial = 0; trial < 100; ++trial) {
            const int k = 1 + trial % 6;
            TopicParams topics;
            for (int j = 0; j < k; ++j) {
                topics.means.push_back(vec({normal(rng), normal(rng)}));
                topics.covariances.push_back(Covariance::diagonal(vec({pos(rng), pos(rng)})));
            }
            UserCollection user{0, {}};
            for (int n = 0; n < 5; ++n) {
                user.images.push_back(vec({normal(rng), normal(rng)}));
            }
            Vector gamma(k), eta(k);
            for (int j = 0; j < k; ++j) {
                gamma[j] = pos(rng);
                eta[j] = normal(rng);
            }
            const std::vector<Vector> usage{random_simplex(k, rng), random_simplex(k, rng)};
            const Matrix phi = update_phi(user, gamma, topics, LinkModel{eta, -2.0}, {1}, usage);
            CHECK((phi.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
            CHECK(phi.minCoeff() >= 0.0);
            CHECK(phi.maxCoeff() <= 1.0);
        }
    }

    TEST_CASE("Dirichlet parameter update")
    {
        VariationalState s;
        Matrix one_hot = Matrix::Zero(3, 3);
        one_hot.col(0).setOnes();
        s.phi = {one_hot, Matrix(0, 3)};
        s.gamma = {vec({0, 0, 0}), vec({0, 0, 0})};
        CHECK(update_gamma(s, 2.0, 0) == vec({5, 2, 2}));
        CHECK(update_gamma(s, 2.0, 1) == vec({2, 2, 2}));

        Matrix frac(2, 2);
        frac << 0.3, 0.7, 0.6, 0.4;
        VariationalState f{{frac}, {vec({0, 0})}};
        CHECK((update_gamma(f, 1.0, 0) - vec({1.9, 2.1})).cwiseAbs().maxCoeff() < 1e-15);

        const auto t = tiny_instance();
        for (int u = 0; u < 2; ++u) {
            const Vector g = update_gamma(t.state, t.alpha, u);
            const Vector want = (t.state.phi[u].colwise().sum().transpose().array() + t.alpha).matrix();
            CHECK((g - want).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(std::abs((g.array() - t.alpha).sum() - t.corpus.users[u].size()) < 1e-6);
        }
    }

    TEST_CASE("topic update matches direct summation")
    {
        const auto t = tiny_instance();
        const TopicParams got = update_topics(t.corpus, t.state, CovKind::diagonal);
        for (int k = 0; k < 2; ++k) {
            double mass = 0.0;
            Vector sum = Vector::Zero(2);
            for (int u = 0; u < 2; ++u) {
                for (std::size_t n = 0; n < t.corpus.users[u].images.size(); ++n) {
                    mass += t.state.phi[u](n, k);
                    sum += t.state.phi[u](n, k) * t.corpus.users[u].images[n];
                }
            }
            const Vector mean = sum / mass;
            Vector var = Vector::Zero(2);
            Matrix full = Matrix::Zero(2, 2);
            for (int u = 0; u < 2; ++u) {
                for (std::size_t n = 0; n < t.corpus.users[u].images.size(); ++n) {
                    const Vector r = t.corpus.users[u].images[n] - mean;
                    var += t.state.phi[u](n, k) * r.cwiseAbs2();
                    full += t.state.phi[u](n, k) * r * r.transpose();
                }
            }
            CHECK((got.means[k] - mean).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((got.covariances[k].variances() - var / mass).cwiseAbs().maxCoeff() < 1e-10);

            const TopicParams f = update_topics(t.corpus, t.state, CovKind::full);
            CHECK((f.covariances[k].matrix() - full / mass).cwiseAbs().maxCoeff() < 1e-10);
        }
    }

    TEST_CASE("topic update special cases")
    {
        SUBCASE("uniform responsibilities give the global mean")
        {
            const Corpus c = make_corpus({{vec({0, 1}), vec({4, 3})}, {vec({2, -1})}});
            VariationalState s{{Matrix::Constant(2, 3, 1.0 / 3), Matrix::Constant(1, 3, 1.0 / 3)},
                               {vec({1, 1, 1}), vec({1, 1, 1})}};
            const auto topics = update_topics(c, s, CovKind::diagonal);
            for (const auto& m : topics.means) {
                CHECK((m - vec({2, 1})).cwiseAbs().maxCoeff() < 1e-14);
            }
        }
        SUBCASE("two points fully on one topic")
        {
            const Corpus c = make_corpus({{vec({0, 0}), vec({2, 2})}});
            Matrix phi(2, 2);
            phi << 1, 0, 1, 0;
            VariationalState s{{phi}, {vec({3, 1})}};
            TopicParams previous{{vec({9, 9}), vec({-7, 5})}, {Covariance::identity(2), Covariance::identity(2)}};
            const auto topics = update_topics(c, s, CovKind::diagonal, &previous);
            CHECK(topics.means[0] == vec({1, 1}));
            CHECK(topics.covariances[0].variances() == vec({1, 1}));
            // The empty topic keeps its mean and takes the global covariance.
            CHECK(topics.means[1] == vec({-7, 5}));
            CHECK(topics.covariances[1].variances() == vec({1, 1}));
        }
        SUBCASE("variances never drop below the floor")
        {
            const Corpus c = make_corpus({{vec({1, 1}), vec({1, 1})}});
            VariationalState s{{Matrix::Ones(2, 1)}, {vec({3})}};
            const auto topics = update_topics(c, s, CovKind::diagonal);
            CHECK(topics.covariances[0].variances() == Vector::Constant(2, kVarianceFloor));
            const auto full = update_topics(c, s, CovKind::full);
            CHECK(full.covariances[0].variances().minCoeff() >= kVarianceFloor);
        }
    }

    TEST_CASE("weighted residuals vanish after the topic update")
    {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Sample s = small_sample(seed);
            std::mt19937_64 rng(seed);
            VariationalState state;
            for (const auto& user : s.corpus.users) {
                Matrix phi(user.size(), 3);
                for (int n = 0; n < user.size(); ++n) {
                    phi.row(n) = random_simplex(3, rng).transpose();
                }
                state.phi.push_back(phi);
                state.gamma.push_back(vec({1, 1, 1}));
            }
            const auto topics = update_topics(s.corpus, state, CovKind::diagonal);
            for (int k = 0; k < 3; ++k) {
                Vector residual = Vector::Zero(s.corpus.feature_dim);
                for (int u = 0; u < s.corpus.num_users(); ++u) {
                    for (int n = 0; n < s.corpus.users[u].size(); ++n) {
                        residual += state.phi[u](n, k) * (s.corpus.users[u].images[n] - topics.means[k]);
                    }
                }
                CHECK(residual.cwiseAbs().maxCoeff() < 1e-8);
            }
        }
    }

    TEST_CASE("link parameters for one link between two uniform users")
    {
        const std::vector<Vector> usage{vec({0.5, 0.5}), vec({0.5, 0.5})};
        const LinkSet one{{0, 1}};
        const LinkModel lm = update_link_params(usage, one, 1.0, 2);
        CHECK(lm.nu == doctest::Approx(-0.6931471805599453).epsilon(1e-14));

        CHECK(update_link_params(usage, one, 0.0, 2).nu == 0.0);

        const double nu = std::log(0.5) - std::log(1.0);
        const double inside = std::log(0.25) - std::log(0.25 + 0.25 - nu);
        const double outside = std::log(0.25) - std::log(0.25 + 0.25) - nu;
        const LinkModel in = update_link_params(usage, one, 1.0, 2, EtaOffset::inside_log);
        const LinkModel out = update_link_params(usage, one, 1.0, 2, EtaOffset::outside_log);
        for (int k = 0; k < 2; ++k) {
            CHECK(std::abs(in.eta[k] - inside) < 1e-12);
            CHECK(std::abs(out.eta[k] - outside) < 1e-12);
        }
    }

    TEST_CASE("link parameters match the straight-line formula on the fixed instance")
    {
        const auto t = tiny_instance();
        const Vector a = t.state.phi[0].colwise().mean().transpose();
        const Vector b = t.state.phi[1].colwise().mean().transpose();
        const double p0 = a[0] * b[0], p1 = a[1] * b[1];
        const double slack = 1.0 - p0 - p1;
        const double nu = std::log(slack) - std::log(t.rho * 0.5 + slack);
        const LinkModel out = update_link_params(t.state, t.train, t.rho, 2, EtaOffset::outside_log);
        const LinkModel in = update_link_params(t.state, t.train, t.rho, 2, EtaOffset::inside_log);
        CHECK(std::abs(out.nu - nu) < 1e-10);
        CHECK(std::abs(out.eta[0] - (std::log(p0) - std::log(p0 + t.rho / 4) - nu)) < 1e-10);
        CHECK(std::abs(out.eta[1] - (std::log(p1) - std::log(p1 + t.rho / 4) - nu)) < 1e-10);
        CHECK(std::abs(in.eta[0] - (std::log(p0) - std::log(p0 + t.rho / 4 - nu))) < 1e-10);
        CHECK(std::abs(in.eta[1] - (std::log(p1) - std::log(p1 + t.rho / 4 - nu))) < 1e-10);
    }

    TEST_CASE("link parameter errors")
    {
        const std::vector<Vector> usage{vec({1, 0}), vec({1, 0}), vec({0.5, 0.5})};
        CHECK_THROWS_AS(update_link_params(usage, LinkSet{}, 1.0, 2), ContractError);
        // Identical one-hot users leave no slack.
        CHECK_THROWS_AS(update_link_params(usage, LinkSet{{0, 1}}, 1.0, 2), NumericError);
        // Topic 1 never appears in a linked pair.
        const std::vector<Vector> lopsided{vec({0.9, 0.0}), vec({0.5, 0.5})};
        CHECK_THROWS_AS(update_link_params(lopsided, LinkSet{{0, 1}}, 1.0, 2), NumericError);
    }

    TEST_CASE("a single topic pins the offset")
    {
        const std::vector<Vector> usage{vec({1}), vec({1}), vec({1})};
        const LinkModel link = update_link_params(usage, LinkSet{{0, 1}, {1, 2}}, 1.0, 1);
        CHECK(link.nu == 0.0);
        CHECK(std::abs(link.eta[0] - std::log(2.0 / 3.0)) < 1e-15);
    }

    TEST_CASE("the offset-outside link update maximizes the link part of the bound")
    {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> step(0.0, 0.05);
        const auto t = tiny_instance();
        for (double rho : {0.3, 1.0, 4.0}) {
            const LinkModel best = update_link_params(t.state, t.train, rho, 2);
            const double at_best = elbo_terms(t.corpus, t.state, t.topics, best, t.alpha, t.train, rho).links;
            for (int trial = 0; trial < 50; ++trial) {
                LinkModel other = best;
                other.nu += step(rng);
                other.eta[0] += step(rng);
                other.eta[1] += step(rng);
                if (other.nu >= 0 || other.eta.maxCoeff() + other.nu >= 0) {
                    continue;
                }
                CHECK(elbo_terms(t.corpus, t.state, t.topics, other, t.alpha, t.train, rho).links <= at_best + 1e-12);
            }
        }
    }

    TEST_CASE("bound terms match direct evaluation")
    {
        const auto t = tiny_instance();
        const ElboTerms e = elbo_terms(t.corpus, t.state, t.topics, t.link, t.alpha, t.train, t.rho);
        double lik = 0, assign = 0, prior = 0, hq = 0, hz = 0;
        for (int u = 0; u < 2; ++u) {
            const Vector& g = t.state.gamma[u];
            const double psi_total = oracle_digamma(g.sum());
            for (std::size_t n = 0; n < t.corpus.users[u].images.size(); ++n) {
                for (int k = 0; k < 2; ++k) {
                    const double p = t.state.phi[u](n, k);
                    lik += p * oracle_log_density(t.corpus.users[u].images[n], t.topics.means[k],
                                                  t.topics.covariances[k].variances());
                    assign += p * (oracle_digamma(g[k]) - psi_total);
                    hz -= p * std::log(p);
                }
            }
            prior += std::lgamma(2 * t.alpha) - 2 * std::lgamma(t.alpha);
            hq -= std::lgamma(g.sum());
            for (int k = 0; k < 2; ++k) {
                prior += (t.alpha - 1) * (oracle_digamma(g[k]) - psi_total);
                hq += std::lgamma(g[k]) - (g[k] - 1) * (oracle_digamma(g[k]) - psi_total);
            }
        }
        const Vector a = t.state.phi[0].colwise().mean().transpose();
        const Vector b = t.state.phi[1].colwise().mean().transpose();
        double links = t.link.eta.dot(a.cwiseProduct(b)) + t.link.nu;
        links += t.rho / 4 * (std::log(1 - std::exp(t.link.eta[0] + t.link.nu)) +
                              std::log(1 - std::exp(t.link.eta[1] + t.link.nu)));
        links += t.rho * 0.5 * std::log(1 - std::exp(t.link.nu));

        CHECK(std::abs(e.likelihood - lik) < 1e-10);
        CHECK(std::abs(e.assignment - assign) < 1e-10);
        CHECK(std::abs(e.prior - prior) < 1e-10);
        CHECK(std::abs(e.theta_entropy - hq) < 1e-10);
        CHECK(std::abs(e.z_entropy - hz) < 1e-10);
        CHECK(std::abs(e.links - links) < 1e-10);
        CHECK(e.total() == doctest::Approx(elbo(t.corpus, t.state, t.topics, t.link, t.alpha, t.train, t.rho)));
    }

    TEST_CASE("initialization with a single topic")
    {
        const Sample s = small_sample(1);
        FitConfig cfg = quiet_config(1, 0);
        cfg.hyperparams.alpha = 2.0;
        const InitResult init = init_state(s.corpus, cfg);
        for (int u = 0; u < s.corpus.num_users(); ++u) {
            CHECK(init.state.phi[u] == Matrix::Ones(s.corpus.users[u].size(), 1));
            CHECK(init.state.gamma[u][0] == 2.0 + s.corpus.users[u].size());
        }
    }

    TEST_CASE("initialization is deterministic")
    {
        const Sample s = small_sample(2);
        const auto a = init_state(s.corpus, quiet_config(3, 5));
        const auto b = init_state(s.corpus, quiet_config(3, 5));
        for (int u = 0; u < s.corpus.num_users(); ++u) {
            CHECK(a.state.phi[u] == b.state.phi[u]);
            CHECK(a.state.gamma[u] == b.state.gamma[u]);
        }
        for (int k = 0; k < 3; ++k) {
            CHECK(a.topics.means[k] == b.topics.means[k]);
        }
    }

    TEST_CASE("k-means++ initialization finds two separated clouds")
    {
        std::vector<Vector> centroids;
        const Corpus c = two_clouds(40, 30.0, 4, &centroids);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto init = init_state(c, quiet_config(2, seed));
            for (const auto& centroid : centroids) {
                const double d = std::min((init.topics.means[0] - centroid).norm(),
                                          (init.topics.means[1] - centroid).norm());
                CHECK(d < 0.5); // cloud std is 1
            }
        }
    }

    TEST_CASE("more topics than images falls back to random assignment")
    {
        const Corpus c = make_corpus({{vec({0, 0}), vec({1, 1})}, {vec({2, 0})}});
        std::ostringstream log;
        FitConfig cfg = quiet_config(5, 1);
        cfg.log = &log;
        const auto init = init_state(c, cfg);
        CHECK(log.str().find("warning") != std::string::npos);
        CHECK(init.topics.num_topics() == 5);
    }

    TEST_CASE("fit loop contract")
    {
        const Sample s = small_sample(3);
        FitConfig cfg = quiet_config(3, 1);
        cfg.hyperparams.max_iters = 1;
        const auto one = fit(s.corpus, s.links, cfg);
        CHECK(one.elbo_trace.size() == 2);
        CHECK(one.usage.size() == static_cast<std::size_t>(s.corpus.num_users()));

        cfg.hyperparams.max_iters = 20;
        const auto a = fit(s.corpus, s.links, cfg);
        const auto b = fit(s.corpus, s.links, cfg);
        CHECK(a.elbo_trace == b.elbo_trace);
        CHECK(a.link.eta == b.link.eta);
    }

    TEST_CASE("results do not depend on the thread count")
    {
        const Sample s = small_sample(4, 30);
        FitConfig cfg = quiet_config(3, 2);
        cfg.threads = 1;
        const auto serial = fit(s.corpus, s.links, cfg);
        cfg.threads = 4;
        const auto parallel = fit(s.corpus, s.links, cfg);
        CHECK(serial.elbo_trace == parallel.elbo_trace);
        for (int u = 0; u < s.corpus.num_users(); ++u) {
            CHECK(serial.state.phi[u] == parallel.state.phi[u]);
        }
    }

    TEST_CASE("state invariants hold after every sweep and the bound does not decrease")
    {
        for (std::uint64_t seed = 10; seed < 16; ++seed) {
            const Sample s = small_sample(seed);
            FitConfig cfg = quiet_config(3, seed);
            cfg.hyperparams.elbo_rel_tol = 1e-12;
            cfg.hyperparams.max_iters = 15;
            const double alpha = cfg.hyperparams.alpha;
            int violations = 0;
            cfg.on_iteration = [&](const IterationView& view) {
                for (int u = 0; u < view.state.num_users(); ++u) {
                    const Matrix& phi = view.state.phi[u];
                    if (phi.rows() > 0 && ((phi.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-9 ||
                                           phi.minCoeff() < 0.0)) {
                        ++violations;
                    }
                    if ((view.state.gamma[u].array() <= 0.0).any() ||
                        std::abs((view.state.gamma[u].array() - alpha).sum() - phi.rows()) > 1e-6) {
                        ++violations;
                    }
                }
            };
            const auto m = fit(s.corpus, s.links, cfg);
            CHECK(violations == 0);
            for (std::size_t i = 1; i < m.elbo_trace.size(); ++i) {
                CHECK(m.elbo_trace[i] >= m.elbo_trace[i - 1] - 1e-6 * std::abs(m.elbo_trace[i - 1]));
            }
        }
    }

    TEST_CASE("users without images are allowed")
    {
        Sample s = small_sample(5);
        s.corpus.users[2].images.clear();
        const auto m = fit(s.corpus, s.links, quiet_config(3, 0));
        CHECK(m.state.phi[2].rows() == 0);
        CHECK(m.state.gamma[2] == Vector::Constant(3, m.hyperparams.alpha));
        CHECK((m.usage[2].array() - 1.0 / 3).abs().maxCoeff() < 1e-15);
    }

    TEST_CASE("fit rejects invalid inputs")
    {
        const Sample s = small_sample(6);
        CHECK_THROWS_AS(fit(s.corpus, LinkSet{}, quiet_config(3, 0)), ContractError);
        CHECK_THROWS_AS(fit(s.corpus, LinkSet{{0, 500}}, quiet_config(3, 0)), ContractError);
        FitConfig bad = quiet_config(3, 0);
        bad.hyperparams.alpha = -1.0;
        CHECK_THROWS_AS(fit(s.corpus, s.links, bad), ContractError);
    }

    TEST_CASE("zero tolerance runs every sweep")
    {
        const Sample s = small_sample(7);
        FitConfig cfg = quiet_config(3, 0);
        cfg.hyperparams.elbo_rel_tol = 0.0;
        cfg.hyperparams.max_iters = 40;
        CHECK(fit(s.corpus, s.links, cfg).elbo_trace.size() == 41);
    }

    TEST_CASE("progress lines go to the diagnostic stream")
    {
        const Sample s = small_sample(7);
        std::ostringstream log;
        FitConfig cfg = quiet_config(3, 0);
        cfg.hyperparams.elbo_rel_tol = 0.0;
        cfg.hyperparams.max_iters = 4;
        cfg.log_every = 2;
        cfg.log = &log;
        fit(s.corpus, s.links, cfg);
        CHECK(log.str().find("iter 2 elbo ") != std::string::npos);
        CHECK(log.str().find("iter 4 elbo ") != std::string::npos);
        CHECK(log.str().find("iter 1 ") == std::string::npos);
    }

    TEST_CASE("full covariance fit runs")
    {
        const Sample s = small_sample(8);
        FitConfig cfg = quiet_config(3, 0);
        cfg.hyperparams.cov_kind = CovKind::full;
        const auto m = fit(s.corpus, s.links, cfg);
        CHECK(m.topics.covariances[0].kind() == CovKind::full);
        for (std::size_t i = 1; i < m.elbo_trace.size(); ++i) {
            CHECK(m.elbo_trace[i] >= m.elbo_trace[i - 1] - 1e-6 * std::abs(m.elbo_trace[i - 1]));
        }
    }
}
