#include "grtm/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "grtm/errors.hpp"

namespace grtm {

namespace fs = std::filesystem;

namespace {

constexpr char kFeatureMagic[8] = {'G', 'R', 'T', 'M', 'F', 'E', 'A', 'T'};
constexpr char kModelMagic[8] = {'G', 'R', 'T', 'M', 'M', 'O', 'D', 'L'};

class ByteWriter {
public:
    void raw(const char* data, std::size_t n) { buf_.append(data, n); }

    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
        }
    }

    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
        }
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void f64s(const double* p, Eigen::Index n)
    {
        for (Eigen::Index i = 0; i < n; ++i) {
            f64(p[i]);
        }
    }

    const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const std::string& buf, std::string source) : buf_(buf), source_(std::move(source)) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }

    void need(std::size_t n, const char* what) const
    {
        if (remaining() < n) {
            std::ostringstream msg;
            msg << source_ << ": byte " << pos_ << ": truncated while reading " << what << " (need " << n
                << " bytes, " << remaining() << " remain)";
            throw FormatError(msg.str());
        }
    }

    std::uint8_t u8(const char* what)
    {
        need(1, what);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }

    std::uint32_t u32(const char* what)
    {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
        }
        return v;
    }

    std::uint64_t u64(const char* what)
    {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
        }
        return v;
    }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    // Reads a finite real; NaN and infinities are rejected with their position.
    double finite(const char* what)
    {
        const std::size_t at = pos_;
        const double v = f64(what);
        if (!std::isfinite(v)) {
            fail(at, std::string("non-finite value in ") + what);
        }
        return v;
    }

    void magic(const char (&expected)[8], const char* kind)
    {
        need(8, "magic");
        if (std::memcmp(buf_.data() + pos_, expected, 8) != 0) {
            fail(pos_, std::string("bad magic, not a ") + kind + " file");
        }
        pos_ += 8;
    }

    [[noreturn]] void fail(std::size_t at, const std::string& what) const
    {
        std::ostringstream msg;
        msg << source_ << ": byte " << at << ": " << what;
        throw FormatError(msg.str());
    }

private:
    const std::string& buf_;
    std::string source_;
    std::size_t pos_ = 0;
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(const std::string& token, T& out)
{
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

Corpus parse_features_binary(const std::string& bytes, const std::string& source)
{
    ByteReader in(bytes, source);
    in.magic(kFeatureMagic, "feature");
    const std::uint32_t version = in.u32("version");
    if (version != kFeatureFormatVersion) {
        in.fail(8, "unsupported feature format version " + std::to_string(version) + " (expected " +
                       std::to_string(kFeatureFormatVersion) + ")");
    }
    const std::uint32_t n_users = in.u32("user count");
    const std::uint32_t dim = in.u32("feature dimension");
    if (n_users == 0) {
        in.fail(12, "feature file declares zero users");
    }
    if (dim == 0) {
        in.fail(16, "feature file declares zero feature dimension");
    }
    std::vector<std::uint32_t> counts(n_users);
    std::uint64_t total = 0;
    for (auto& c : counts) {
        c = in.u32("image counts");
        total += c;
    }
    const std::uint64_t expected = total * dim * 8;
    if (in.remaining() != expected) {
        std::ostringstream msg;
        msg << "payload size mismatch: expected " << expected << " bytes, found " << in.remaining();
        in.fail(in.offset(), msg.str());
    }

    Corpus corpus;
    corpus.feature_dim = static_cast<int>(dim);
    for (std::uint32_t u = 0; u < n_users; ++u) {
        UserCollection user;
        user.user_id = static_cast<int>(u);
        for (std::uint32_t n = 0; n < counts[u]; ++n) {
            Vector x(dim);
            for (std::uint32_t j = 0; j < dim; ++j) {
                x[j] = in.finite("image features");
            }
            user.images.push_back(std::move(x));
        }
        corpus.users.push_back(std::move(user));
    }
    return corpus;
}

Corpus parse_features_csv(const std::string& text, const fs::path& path, IdMap* id_map)
{
    const std::string source = path.string();
    auto fail = [&](std::size_t line_no, const std::string& what) -> void {
        throw FormatError(source + ": line " + std::to_string(line_no) + ": " + what);
    };

    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    int dim = -1;
    std::map<long long, std::vector<Vector>> by_user;
    std::vector<long long> order;

    while (std::getline(lines, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto fields = split_csv(t);
        long long id = 0;
        if (!parse_number(fields[0], id)) {
            if (!seen_data) {
                seen_data = true; // header row
                continue;
            }
            fail(line_no, "column 1: user id '" + fields[0] + "' is not an integer");
        }
        seen_data = true;
        const int n_features = static_cast<int>(fields.size()) - 1;
        if (n_features < 1) {
            fail(line_no, "no feature values");
        }
        if (dim < 0) {
            dim = n_features;
        } else if (n_features != dim) {
            fail(line_no, "expected " + std::to_string(dim) + " feature values, found " + std::to_string(n_features));
        }
        Vector x(n_features);
        for (int j = 0; j < n_features; ++j) {
            double v = 0.0;
            if (!parse_number(fields[j + 1], v)) {
                fail(line_no, "column " + std::to_string(j + 2) + ": cannot parse '" + fields[j + 1] + "' as a number");
            }
            if (!std::isfinite(v)) {
                fail(line_no, "column " + std::to_string(j + 2) + ": non-finite value");
            }
            x[j] = v;
        }
        by_user[id].push_back(std::move(x));
    }
    if (by_user.empty()) {
        throw FormatError(source + ": line " + std::to_string(line_no) + ": no feature rows");
    }

    Corpus corpus;
    corpus.feature_dim = dim;
    IdMap map;
    int dense = 0;
    for (auto& [id, images] : by_user) {
        if (id != dense) {
            map.reindexed = true;
        }
        map.original_ids.push_back(id);
        UserCollection user;
        user.user_id = dense++;
        user.images = std::move(images);
        corpus.users.push_back(std::move(user));
    }
    if (map.reindexed) {
        std::ostringstream out;
        out << "# dense_id original_id\n";
        for (std::size_t i = 0; i < map.original_ids.size(); ++i) {
            out << i << ' ' << map.original_ids[i] << '\n';
        }
        fs::path sidecar = path;
        sidecar += ".idmap";
        write_file_atomic(sidecar, out.str());
    }
    if (id_map) {
        *id_map = std::move(map);
    }
    return corpus;
}

} // namespace

std::string format_real(double x)
{
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

Corpus load_features(const fs::path& path, IdMap* id_map)
{
    const std::string bytes = read_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kFeatureMagic, 8) == 0) {
        if (id_map) {
            *id_map = IdMap {};
        }
        return parse_features_binary(bytes, path.string());
    }
    return parse_features_csv(bytes, path, id_map);
}

void save_features(const Corpus& corpus, const fs::path& path)
{
    ByteWriter out;
    out.raw(kFeatureMagic, 8);
    out.u32(kFeatureFormatVersion);
    out.u32(static_cast<std::uint32_t>(corpus.num_users()));
    out.u32(static_cast<std::uint32_t>(corpus.feature_dim));
    for (const auto& user : corpus.users) {
        out.u32(static_cast<std::uint32_t>(user.size()));
    }
    for (const auto& user : corpus.users) {
        for (const auto& x : user.images) {
            if (x.size() != corpus.feature_dim) {
                throw ContractError("save_features: image dimension does not match the corpus");
            }
            out.f64s(x.data(), x.size());
        }
    }
    write_file_atomic(path, out.bytes());
}

void save_features_csv(const Corpus& corpus, const fs::path& path)
{
    std::ostringstream out;
    out << "user_id";
    for (int j = 0; j < corpus.feature_dim; ++j) {
        out << ",f" << j;
    }
    out << '\n';
    for (const auto& user : corpus.users) {
        for (const auto& x : user.images) {
            out << user.user_id;
            for (double v : x) {
                out << ',' << format_real(v);
            }
            out << '\n';
        }
    }
    write_file_atomic(path, out.str());
}

LinkSet load_links(const fs::path& path)
{
    const std::string text = read_file(path);
    const std::string source = path.string();
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    LinkSet links;
    while (std::getline(lines, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream tokens(line);
        std::vector<std::string> parts;
        for (std::string tok; tokens >> tok;) {
            parts.push_back(tok);
        }
        if (parts.empty()) {
            continue;
        }
        auto fail = [&](const std::string& what) {
            throw FormatError(source + ": line " + std::to_string(line_no) + ": " + what);
        };
        if (parts.size() != 2) {
            fail("expected two user ids, found " + std::to_string(parts.size()) + " tokens");
        }
        int ends[2];
        for (int i = 0; i < 2; ++i) {
            if (!parse_number(parts[i], ends[i])) {
                fail("'" + parts[i] + "' is not an integer user id");
            }
            if (ends[i] < 0) {
                fail("negative user id " + parts[i]);
            }
        }
        if (ends[0] == ends[1]) {
            fail("self-loop on user " + parts[0]);
        }
        links.insert(ends[0], ends[1]);
    }
    return links;
}

void save_links(const LinkSet& links, const fs::path& path)
{
    std::ostringstream out;
    for (const auto& [u, v] : links) {
        out << u << ' ' << v << '\n';
    }
    write_file_atomic(path, out.str());
}

void save_model(const FittedModel& model, const fs::path& path, bool include_phi)
{
    const auto& hp = model.hyperparams;
    const int k = hp.num_topics;
    if (model.topics.num_topics() != k || model.link.eta.size() != k) {
        throw ContractError("save_model: topic count disagrees with hyperparameters");
    }
    const int d = k > 0 ? static_cast<int>(model.topics.means.front().size()) : 0;
    include_phi = include_phi && model.has_phi();

    ByteWriter out;
    out.raw(kModelMagic, 8);
    out.u32(kModelFormatVersion);
    out.f64(hp.alpha);
    out.u32(static_cast<std::uint32_t>(k));
    out.f64(hp.rho);
    out.u8(hp.cov_kind == CovKind::full ? 1 : 0);
    out.u32(static_cast<std::uint32_t>(hp.max_iters));
    out.f64(hp.elbo_rel_tol);
    out.u64(hp.seed);
    out.u32(static_cast<std::uint32_t>(d));
    for (int j = 0; j < k; ++j) {
        const Vector& mean = model.topics.means[j];
        const Covariance& cov = model.topics.covariances[j];
        if (cov.kind() != hp.cov_kind) {
            throw ContractError("save_model: covariance kind of topic " + std::to_string(j) +
                                " disagrees with hyperparameters");
        }
        out.f64s(mean.data(), mean.size());
        if (cov.kind() == CovKind::diagonal) {
            out.f64s(cov.variances().data(), d);
        } else {
            const Matrix m = cov.matrix();
            out.f64s(m.data(), m.size());
        }
    }
    out.f64s(model.link.eta.data(), k);
    out.f64(model.link.nu);

    const int n = model.num_users();
    out.u32(static_cast<std::uint32_t>(n));
    out.u8(include_phi ? 1 : 0);
    for (int u = 0; u < n; ++u) {
        out.f64s(model.state.gamma.at(u).data(), k);
        out.f64s(model.usage[u].data(), k);
        if (include_phi) {
            const Matrix& phi = model.state.phi.at(u);
            out.u32(static_cast<std::uint32_t>(phi.rows()));
            for (Eigen::Index r = 0; r < phi.rows(); ++r) {
                for (Eigen::Index c = 0; c < phi.cols(); ++c) {
                    out.f64(phi(r, c));
                }
            }
        }
    }
    out.u32(static_cast<std::uint32_t>(model.elbo_trace.size()));
    out.f64s(model.elbo_trace.data(), static_cast<Eigen::Index>(model.elbo_trace.size()));
    write_file_atomic(path, out.bytes());
}

FittedModel load_model(const fs::path& path)
{
    const std::string bytes = read_file(path);
    ByteReader in(bytes, path.string());
    in.magic(kModelMagic, "model");
    const std::uint32_t version = in.u32("version");
    if (version != kModelFormatVersion) {
        in.fail(8, "model format version " + std::to_string(version) + " is not the supported version " +
                       std::to_string(kModelFormatVersion));
    }

    FittedModel model;
    auto& hp = model.hyperparams;
    hp.alpha = in.f64("alpha");
    hp.num_topics = static_cast<int>(in.u32("topic count"));
    hp.rho = in.f64("rho");
    const std::size_t kind_at = in.offset();
    const std::uint8_t kind = in.u8("covariance kind");
    if (kind > 1) {
        in.fail(kind_at, "unknown covariance kind " + std::to_string(kind));
    }
    hp.cov_kind = kind == 1 ? CovKind::full : CovKind::diagonal;
    hp.max_iters = static_cast<int>(in.u32("max_iters"));
    hp.elbo_rel_tol = in.f64("elbo_rel_tol");
    hp.seed = in.u64("seed");
    try {
        hp.validate();
    } catch (const ContractError& e) {
        in.fail(12, std::string("invalid hyperparameters: ") + e.what());
    }
    const int k = hp.num_topics;
    const std::size_t dim_at = in.offset();
    const int d = static_cast<int>(in.u32("feature dimension"));
    if (d < 1 || (hp.cov_kind == CovKind::full && d > kMaxFullCovarianceDim)) {
        in.fail(dim_at, "invalid feature dimension " + std::to_string(d));
    }
    // Reject absurd headers before allocating.
    const std::uint64_t per_topic = hp.cov_kind == CovKind::full ? static_cast<std::uint64_t>(d) * (d + 1)
                                                                  : 2ull * static_cast<std::uint64_t>(d);
    in.need(static_cast<std::size_t>(std::min<std::uint64_t>(per_topic * 8 * k, bytes.size() + 1)), "topics");

    for (int j = 0; j < k; ++j) {
        Vector mean(d);
        for (int i = 0; i < d; ++i) {
            mean[i] = in.finite("topic mean");
        }
        const std::size_t cov_at = in.offset();
        try {
            if (hp.cov_kind == CovKind::diagonal) {
                Vector var(d);
                for (int i = 0; i < d; ++i) {
                    var[i] = in.finite("topic variances");
                }
                model.topics.covariances.push_back(Covariance::diagonal(var));
            } else {
                Matrix m(d, d);
                for (Eigen::Index i = 0; i < m.size(); ++i) {
                    m.data()[i] = in.finite("topic covariance");
                }
                model.topics.covariances.push_back(Covariance::full(m));
            }
        } catch (const ContractError& e) {
            in.fail(cov_at, "topic " + std::to_string(j) + ": " + e.what());
        } catch (const NumericError& e) {
            in.fail(cov_at, "topic " + std::to_string(j) + ": " + e.what());
        }
        model.topics.means.push_back(std::move(mean));
    }
    model.link.eta.resize(k);
    for (int j = 0; j < k; ++j) {
        model.link.eta[j] = in.finite("eta");
    }
    model.link.nu = in.finite("nu");

    const int n = static_cast<int>(in.u32("user count"));
    in.need(static_cast<std::size_t>(std::min<std::uint64_t>(16ull * k * n, bytes.size() + 1)), "user records");
    const std::size_t flag_at = in.offset();
    const std::uint8_t has_phi = in.u8("phi flag");
    if (has_phi > 1) {
        in.fail(flag_at, "invalid phi flag " + std::to_string(has_phi));
    }
    for (int u = 0; u < n; ++u) {
        Vector gamma(k);
        Vector usage(k);
        for (int j = 0; j < k; ++j) {
            gamma[j] = in.finite("gamma");
        }
        for (int j = 0; j < k; ++j) {
            usage[j] = in.finite("usage");
        }
        model.state.gamma.push_back(std::move(gamma));
        model.usage.push_back(std::move(usage));
        if (has_phi) {
            const std::uint32_t rows = in.u32("image count");
            in.need(static_cast<std::size_t>(std::min<std::uint64_t>(8ull * rows * k, bytes.size() + 1)), "phi");
            Matrix phi(rows, k);
            for (std::uint32_t r = 0; r < rows; ++r) {
                for (int c = 0; c < k; ++c) {
                    phi(r, c) = in.finite("phi");
                }
            }
            model.state.phi.push_back(std::move(phi));
        }
    }
    const std::uint32_t trace_len = in.u32("trace length");
    in.need(static_cast<std::size_t>(std::min<std::uint64_t>(8ull * trace_len, bytes.size() + 1)), "elbo trace");
    for (std::uint32_t i = 0; i < trace_len; ++i) {
        model.elbo_trace.push_back(in.f64("elbo trace"));
    }
    if (in.remaining() != 0) {
        in.fail(in.offset(), std::to_string(in.remaining()) + " unexpected trailing bytes");
    }
    return model;
}

void export_report(const EvalReport& report, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create report directory " + dir.string());
    }
    std::ostringstream roc;
    roc << "threshold,fpr,tpr\n";
    for (const auto& p : report.roc_points) {
        roc << format_real(p.threshold) << ',' << format_real(p.fpr) << ',' << format_real(p.tpr) << '\n';
    }
    std::ostringstream pr;
    pr << "threshold,recall,precision\n";
    for (const auto& p : report.pr_points) {
        pr << format_real(p.threshold) << ',' << format_real(p.recall) << ',' << format_real(p.precision) << '\n';
    }
    std::ostringstream summary;
    summary << "roc_auc=" << format_real(report.roc_auc) << '\n';
    summary << "pr_auc=" << format_real(report.pr_auc) << '\n';
    for (const auto& [level, precision] : report.precision_at) {
        char label[32];
        std::snprintf(label, sizeof label, "%.2f", level);
        summary << "precision_at_" << label << '=' << format_real(precision) << '\n';
    }
    write_file_atomic(dir / "roc.csv", roc.str());
    write_file_atomic(dir / "pr.csv", pr.str());
    write_file_atomic(dir / "summary.txt", summary.str());
}

void save_ground_truth(const GroundTruth& truth, const fs::path& path)
{
    using nlohmann::json;
    json j;
    j["theta"] = json::array();
    for (Eigen::Index u = 0; u < truth.theta.rows(); ++u) {
        std::vector<double> row(truth.theta.cols());
        for (Eigen::Index k = 0; k < truth.theta.cols(); ++k) {
            row[k] = truth.theta(u, k);
        }
        j["theta"].push_back(row);
    }
    j["z"] = truth.z;
    j["means"] = json::array();
    j["variances"] = json::array();
    for (int k = 0; k < truth.topics.num_topics(); ++k) {
        const Vector& m = truth.topics.means[k];
        const Vector& v = truth.topics.covariances[k].variances();
        j["means"].push_back(std::vector<double>(m.data(), m.data() + m.size()));
        j["variances"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
    }
    j["eta"] = std::vector<double>(truth.link.eta.data(), truth.link.eta.data() + truth.link.eta.size());
    j["nu"] = truth.link.nu;
    write_file_atomic(path, j.dump(1) + "\n");
}

GroundTruth load_ground_truth(const fs::path& path)
{
    using nlohmann::json;
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
    }
    auto to_vector = [](const std::vector<double>& v) {
        return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    try {
        GroundTruth t;
        const auto theta = j.at("theta").get<std::vector<std::vector<double>>>();
        const auto k = theta.empty() ? 0 : static_cast<Eigen::Index>(theta.front().size());
        t.theta.resize(static_cast<Eigen::Index>(theta.size()), k);
        for (std::size_t u = 0; u < theta.size(); ++u) {
            for (Eigen::Index c = 0; c < k; ++c) {
                t.theta(static_cast<Eigen::Index>(u), c) = theta[u].at(static_cast<std::size_t>(c));
            }
        }
        t.z = j.at("z").get<std::vector<std::vector<int>>>();
        for (const auto& m : j.at("means").get<std::vector<std::vector<double>>>()) {
            t.topics.means.push_back(to_vector(m));
        }
        for (const auto& v : j.at("variances").get<std::vector<std::vector<double>>>()) {
            t.topics.covariances.push_back(Covariance::diagonal(to_vector(v)));
        }
        t.link.eta = to_vector(j.at("eta").get<std::vector<double>>());
        t.link.nu = j.at("nu").get<double>();
        return t;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": byte 0: malformed ground truth: " + e.what());
    }
}

} // namespace grtm
