#include "dcon/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dcon/errors.hpp"
#include "dcon/rng.hpp"

namespace dcon {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

double ScalerState::scale_value(double v, const ColumnRange& r) const {
    if (!fitted) return v;
    if (!(r.max > r.min)) return 0.0;
    return (v - r.min) / (r.max - r.min);
}

double ScalerState::unscale_value(double v, const ColumnRange& r) const {
    if (!fitted) return v;
    if (!(r.max > r.min)) return r.min;
    return r.min + v * (r.max - r.min);
}

Dataset parse_csv(const std::string& text, const std::string& target, const std::string& source,
                  bool target_optional) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        for (auto f : split_commas(line)) header.emplace_back(f);
        break;
    }
    if (header.empty()) throw validation_error(source + ": missing header row");
    std::set<std::string> seen;
    for (const auto& h : header) {
        if (!seen.insert(h).second) throw validation_error(source + ": duplicate column name '" + h + "'");
    }

    int tcol = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == target) tcol = static_cast<int>(i);
    if (tcol < 0 && !target.empty() &&
        std::all_of(target.begin(), target.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
        const long idx = std::stol(target);
        if (idx < static_cast<long>(header.size())) tcol = static_cast<int>(idx);
    }
    if (tcol < 0 && !target_optional)
        throw validation_error(source + ": target column '" + target + "' not found");
    if (static_cast<int>(header.size()) - (tcol >= 0 ? 1 : 0) < 1)
        throw validation_error(source + ": need at least one feature column");

    const int cols = static_cast<int>(header.size());
    std::vector<double> values;
    int rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_commas(line);
        if (static_cast<int>(fields.size()) != cols) {
            std::ostringstream msg;
            msg << source << ": line " << line_no << " has " << fields.size() << " fields, expected " << cols;
            throw validation_error(msg.str());
        }
        for (int c = 0; c < cols; ++c) {
            double v;
            if (!parse_double(fields[c], v)) {
                std::ostringstream msg;
                msg << source << ": line " << line_no << ", column '" << header[c]
                    << "': cannot parse '" << fields[c] << "' as a finite number";
                throw validation_error(msg.str());
            }
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw validation_error(source + ": no data rows");

    Dataset d;
    d.X.resize(rows, tcol >= 0 ? cols - 1 : cols);
    d.y.resize(tcol >= 0 ? rows : 0);
    for (int r = 0; r < rows; ++r) {
        int k = 0;
        for (int c = 0; c < cols; ++c) {
            const double v = values[static_cast<std::size_t>(r) * cols + c];
            if (c == tcol)
                d.y(r) = v;
            else
                d.X(r, k++) = v;
        }
    }
    for (int c = 0; c < cols; ++c) {
        if (c == tcol)
            d.target_name = header[c];
        else
            d.feature_names.push_back(header[c]);
    }
    return d;
}

Dataset load_csv(const std::string& path, const std::string& target, bool target_optional) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot open data file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str(), target, path, target_optional);
}

ScalerState fit_minmax(const Dataset& d) {
    ScalerState s;
    s.fitted = true;
    for (int c = 0; c < d.n(); ++c) s.features.push_back({d.X.col(c).minCoeff(), d.X.col(c).maxCoeff()});
    s.target = {d.y.minCoeff(), d.y.maxCoeff()};
    return s;
}

Dataset apply_scaler(const Dataset& d, const ScalerState& s) {
    if (d.scaler.fitted) throw validation_error("dataset is already scaled");
    if (s.fitted && static_cast<int>(s.features.size()) != d.n())
        throw validation_error("scaler column count does not match the dataset");
    Dataset out = d;
    out.scaler = s;
    for (int c = 0; c < d.n(); ++c)
        for (int r = 0; r < d.m(); ++r) out.X(r, c) = s.scale_value(d.X(r, c), s.features[c]);
    for (Eigen::Index r = 0; r < d.y.size(); ++r) out.y(r) = s.scale_value(d.y(r), s.target);
    return out;
}

Dataset minmax_scale(const Dataset& d) { return apply_scaler(d, fit_minmax(d)); }

Dataset unscale(const Dataset& d) {
    Dataset out = d;
    const ScalerState& s = d.scaler;
    if (!s.fitted) return out;
    for (int c = 0; c < d.n(); ++c)
        for (int r = 0; r < d.m(); ++r) out.X(r, c) = s.unscale_value(d.X(r, c), s.features[c]);
    for (Eigen::Index r = 0; r < d.y.size(); ++r) out.y(r) = s.unscale_value(d.y(r), s.target);
    out.scaler = ScalerState{};
    return out;
}

double smallest_singular_value(const Eigen::MatrixXd& A) {
    if (A.rows() < A.cols()) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    return svd.singularValues().minCoeff();
}

Eigen::MatrixXd augment_ones(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd M(X.rows(), X.cols() + 1);
    M.leftCols(X.cols()) = X;
    M.col(X.cols()).setOnes();
    return M;
}

DesignMatrix build_design_matrix(const Dataset& d, double rank_tol) {
    if (d.m() < 1 || d.n() < 1) throw validation_error("dataset must have at least one row and one feature");
    if (!d.X.allFinite() || !d.y.allFinite()) throw validation_error("dataset contains non-finite values");
    DesignMatrix dm;
    dm.M = augment_ones(d.X);
    const int k = d.n() + 1;
    if (d.m() < k) {
        std::ostringstream msg;
        msg << "M^T M is singular: " << d.m() << " rows cannot give full column rank " << k
            << " (full-rank design matrix required)";
        throw validation_error(msg.str());
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dm.M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    dm.U = svd.matrixU();
    dm.s = svd.singularValues();
    dm.V = svd.matrixV();
    dm.sigma_min = dm.s.minCoeff();
    if (!(dm.sigma_min > rank_tol)) {
        std::ostringstream msg;
        msg << "smallest singular value of [X | 1] is " << dm.sigma_min << " <= " << rank_tol
            << "; M^T M must be positive definite";
        throw validation_error(msg.str());
    }
    return dm;
}

Dataset subset(const Dataset& d, const std::vector<int>& rows) {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), d.n());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(rows[i]);
        out.y(static_cast<Eigen::Index>(i)) = d.y(rows[i]);
    }
    out.feature_names = d.feature_names;
    out.target_name = d.target_name;
    out.scaler = d.scaler;
    return out;
}

SplitResult split(const Dataset& d, const SplitSpec& s) {
    if (s.train_fraction < 0 || s.val_fraction < 0 || s.test_fraction < 0)
        throw validation_error("split fractions must be nonnegative");
    if (std::abs(s.train_fraction + s.val_fraction + s.test_fraction - 1.0) > 1e-9)
        throw validation_error("split fractions must sum to 1");
    const int m = d.m();
    const int n_train = static_cast<int>(std::floor(s.train_fraction * m + 1e-9));
    const int n_val = static_cast<int>(std::floor(s.val_fraction * m + 1e-9));
    const int n_test = m - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        std::ostringstream msg;
        msg << "split of " << m << " rows gives sizes (" << n_train << ", " << n_val << ", " << n_test
            << "); every part must be non-empty";
        throw validation_error(msg.str());
    }
    Philox rng = make_stream(s.seed, "split");
    const std::vector<int> perm = random_permutation(m, rng);
    SplitResult r;
    r.train_idx.assign(perm.begin(), perm.begin() + n_train);
    r.val_idx.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    r.test_idx.assign(perm.begin() + n_train + n_val, perm.end());
    r.train = subset(d, r.train_idx);
    r.val = subset(d, r.val_idx);
    r.test = subset(d, r.test_idx);
    return r;
}

SplitResult scale_split(const SplitResult& raw) {
    SplitResult r = raw;
    const ScalerState s = fit_minmax(raw.train);
    r.train = apply_scaler(raw.train, s);
    r.val = apply_scaler(raw.val, s);
    r.test = apply_scaler(raw.test, s);
    return r;
}

}  // namespace dcon
