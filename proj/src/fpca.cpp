#include "mfts/fpca.hpp"

#include "mfts/csv.hpp"

#include <cmath>
#include <sstream>

namespace mfts {

CurveBlock make_block(const SmoothCurveSet& curves, const std::vector<SeriesKey>& keys) {
    CurveBlock block;
    block.keys = keys;
    block.years = curves.years;
    block.omega = static_cast<int>(keys.size());
    block.p = static_cast<int>(curves.ages.size());
    block.data.resize(curves.years.size(),
                      static_cast<Eigen::Index>(block.omega) * block.p);
    for (int l = 0; l < block.omega; ++l) {
        int s = -1;
        for (std::size_t i = 0; i < curves.series.size(); ++i)
            if (curves.series[i] == keys[l]) s = static_cast<int>(i);
        if (s < 0) throw Error("series " + keys[l].str() + " not found in smoothed curves");
        for (std::size_t t = 0; t < curves.years.size(); ++t)
            for (int a = 0; a < block.p; ++a)
                block.data(t, static_cast<Eigen::Index>(l) * block.p + a) =
                    curves.value(static_cast<int>(t), s, a);
    }
    return block;
}

Eigen::VectorXd quadrature_weights(const std::vector<double>& centers, bool trapezoid) {
    const int p = static_cast<int>(centers.size());
    if (!trapezoid) return Eigen::VectorXd::Ones(p);
    Eigen::VectorXd w(p);
    for (int i = 0; i < p; ++i) {
        const double left = i > 0 ? centers[i - 1] : centers[0];
        const double right = i + 1 < p ? centers[i + 1] : centers[p - 1];
        w[i] = 0.5 * (right - left);
    }
    return w;
}

Eigen::VectorXd estimate_mean(const CurveBlock& block) {
    if (block.data.rows() < 2) throw Error("mean estimation needs at least two years");
    return block.data.colwise().mean();
}

namespace {

// sign convention: the entry of largest magnitude is positive, ties broken
// by the lowest index
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int arg = 0;
    double best = std::abs(v[0]);
    for (int i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > best) {
            best = std::abs(v[i]);
            arg = i;
        }
    }
    if (v[arg] < 0.0) v = -v;
}

} // namespace

FpcaModel decompose(const CurveBlock& block, const Eigen::VectorXd& quadrature,
                    const FpcaOptions& options) {
    const int n = static_cast<int>(block.data.rows());
    const int m = static_cast<int>(block.data.cols());
    if (block.omega < 1 || block.p < 1 || m != block.omega * block.p)
        throw Error("malformed curve block");
    if (n < 2) throw Error("decomposition needs at least two years");
    if (quadrature.size() != block.p) throw Error("quadrature length != grid size");
    for (int t = 0; t < n; ++t)
        for (int j = 0; j < m; ++j)
            if (!std::isfinite(block.data(t, j)))
                throw Error("non-finite curve value for series " +
                            block.keys[j / block.p].str() + " year " +
                            std::to_string(block.years[t]) + " age index " +
                            std::to_string(j % block.p));

    FpcaModel model;
    model.keys = block.keys;
    model.years = block.years;
    model.omega = block.omega;
    model.p = block.p;
    model.quadrature = quadrature;
    model.mean = estimate_mean(block);

    Eigen::MatrixXd centered = block.data.rowwise() - model.mean.transpose();
    Eigen::VectorXd stacked_q(m);
    for (int l = 0; l < block.omega; ++l) stacked_q.segment(l * block.p, block.p) = quadrature;
    const Eigen::VectorXd dhalf = stacked_q.cwiseSqrt();

    // Y = centered * D^(1/2) / sqrt(n-1); primal decomposes Y'Y, dual YY'
    const Eigen::MatrixXd y =
        centered * dhalf.asDiagonal() / std::sqrt(static_cast<double>(n - 1));

    const bool use_dual = options.path == EigenPath::Dual ||
                          (options.path == EigenPath::Auto && m > n);

    Eigen::VectorXd values;      // candidate eigenvalues, ascending from Eigen
    Eigen::MatrixXd functions_w; // eigenvectors in the weighted coordinates
    if (!use_dual) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(y.transpose() * y);
        if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
        values = solver.eigenvalues();
        functions_w = solver.eigenvectors();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(y * y.transpose());
        if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
        values = solver.eigenvalues();
        functions_w.resize(m, values.size());
        for (int k = 0; k < values.size(); ++k) {
            if (values[k] > 0.0)
                functions_w.col(k) = y.transpose() * solver.eigenvectors().col(k) /
                                     std::sqrt(values[k]);
            else
                functions_w.col(k).setZero();
        }
    }

    // keep numerically meaningful components, descending
    const double top = values.size() ? values.maxCoeff() : 0.0;
    const double cutoff = std::max(top * 1e-12, 1e-300);
    std::vector<int> kept;
    for (int k = static_cast<int>(values.size()) - 1; k >= 0; --k)
        if (values[k] > cutoff) kept.push_back(k);

    if (kept.empty()) {
        model.degenerate = true;
        model.eigenvalues = Eigen::VectorXd::Zero(1);
        model.eigenfunctions = Eigen::MatrixXd::Zero(m, 1);
        model.eigenfunctions(0, 0) = 1.0 / dhalf[0];
        model.scores = Eigen::MatrixXd::Zero(n, 1);
        model.explained = Eigen::VectorXd::Ones(1);
        model.K = 1;
        return model;
    }

    const int r = static_cast<int>(kept.size());
    model.eigenvalues.resize(r);
    model.eigenfunctions.resize(m, r);
    for (int i = 0; i < r; ++i) {
        model.eigenvalues[i] = values[kept[i]];
        // back to curve coordinates: phi = D^(-1/2) u
        model.eigenfunctions.col(i) = functions_w.col(kept[i]).cwiseQuotient(dhalf);
        fix_sign(model.eigenfunctions.col(i));
    }

    // beta_{t,k} = <f_t - mu, phi_k> under the quadrature inner product
    model.scores = centered * stacked_q.asDiagonal() * model.eigenfunctions;

    const double total = model.eigenvalues.sum();
    model.explained.resize(r);
    double cum = 0.0;
    for (int i = 0; i < r; ++i) {
        cum += model.eigenvalues[i];
        model.explained[i] = cum / total;
    }
    model.K = select_K(model.eigenvalues, options.variance_threshold);
    return model;
}

FpcaModel decompose(const CurveBlock& block, const FpcaOptions& options) {
    return decompose(block, Eigen::VectorXd::Ones(block.p), options);
}

int select_K(const Eigen::VectorXd& eigenvalues, double threshold) {
    if (eigenvalues.size() == 0) throw Error("select_K on empty spectrum");
    double total = 0.0;
    for (int i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues[i] > 0.0) total += eigenvalues[i];
    if (total <= 0.0) return 1; // degenerate block
    double cum = 0.0;
    for (int i = 0; i < eigenvalues.size(); ++i) {
        cum += std::max(eigenvalues[i], 0.0);
        if (cum / total >= threshold) return i + 1;
    }
    return static_cast<int>(eigenvalues.size());
}

Eigen::VectorXd reconstruct_k(const FpcaModel& model, const Eigen::VectorXd& scores, int k) {
    if (scores.size() != k)
        throw Error("score vector length " + std::to_string(scores.size()) +
                    " does not match requested component count " + std::to_string(k));
    if (k > model.rank()) throw Error("component count exceeds model rank");
    Eigen::VectorXd out = model.mean;
    if (k > 0) out += model.eigenfunctions.leftCols(k) * scores;
    return out;
}

Eigen::VectorXd reconstruct(const FpcaModel& model, const Eigen::VectorXd& scores) {
    return reconstruct_k(model, scores, model.K);
}

namespace {

std::string meta_path(const std::filesystem::path& stem, const char* part) {
    return stem.string() + "." + part + ".csv";
}

} // namespace

void FpcaModel::save(const std::filesystem::path& stem) const {
    std::ostringstream meta;
    meta << "key,value\n";
    meta << "omega," << omega << "\n";
    meta << "p," << p << "\n";
    meta << "K," << K << "\n";
    meta << "degenerate," << (degenerate ? 1 : 0) << "\n";
    for (int i = 0; i < p; ++i)
        meta << "quadrature_" << i << "," << format_full(quadrature[i]) << "\n";
    write_file_atomic(meta_path(stem, "meta"), meta.str());

    std::ostringstream means;
    means << "series,age_index,value\n";
    for (int l = 0; l < omega; ++l)
        for (int i = 0; i < p; ++i)
            means << keys[l].str() << "," << i << "," << format_full(mean[l * p + i]) << "\n";
    write_file_atomic(meta_path(stem, "means"), means.str());

    std::ostringstream evals;
    evals << "k,value\n";
    for (int k = 0; k < rank(); ++k)
        evals << (k + 1) << "," << format_full(eigenvalues[k]) << "\n";
    write_file_atomic(meta_path(stem, "eigenvalues"), evals.str());

    std::ostringstream efuns;
    efuns << "k,series,age_index,value\n";
    for (int k = 0; k < rank(); ++k)
        for (int l = 0; l < omega; ++l)
            for (int i = 0; i < p; ++i)
                efuns << (k + 1) << "," << keys[l].str() << "," << i << ","
                      << format_full(eigenfunctions(l * p + i, k)) << "\n";
    write_file_atomic(meta_path(stem, "eigenfunctions"), efuns.str());

    std::ostringstream sc;
    sc << "year,k,value\n";
    for (std::size_t t = 0; t < years.size(); ++t)
        for (int k = 0; k < rank(); ++k)
            sc << years[t] << "," << (k + 1) << "," << format_full(scores(t, k)) << "\n";
    write_file_atomic(meta_path(stem, "scores"), sc.str());
}

FpcaModel FpcaModel::load(const std::filesystem::path& stem) {
    FpcaModel model;
    {
        const CsvTable meta = read_csv(meta_path(stem, "meta"));
        const int ck = meta.column("key"), cv = meta.column("value");
        std::vector<double> quad;
        for (const auto& row : meta.rows) {
            const std::string& key = row[ck];
            if (key == "omega") model.omega = static_cast<int>(parse_long(row[cv], "omega"));
            else if (key == "p") model.p = static_cast<int>(parse_long(row[cv], "p"));
            else if (key == "K") model.K = static_cast<int>(parse_long(row[cv], "K"));
            else if (key == "degenerate") model.degenerate = row[cv] == "1";
            else if (key.rfind("quadrature_", 0) == 0)
                quad.push_back(parse_double(row[cv], key));
        }
        if (static_cast<int>(quad.size()) != model.p)
            throw Error("model bundle: quadrature length mismatch");
        model.quadrature = Eigen::Map<Eigen::VectorXd>(quad.data(), quad.size());
    }
    {
        const CsvTable means = read_csv(meta_path(stem, "means"));
        const int cs = means.column("series"), ci = means.column("age_index"),
                  cv = means.column("value");
        model.mean.resize(static_cast<Eigen::Index>(model.omega) * model.p);
        model.keys.assign(model.omega, SeriesKey{});
        for (const auto& row : means.rows) {
            const SeriesKey key = SeriesKey::parse(row[cs]);
            // series appear in block order
            int l = -1;
            for (int i = 0; i < model.omega; ++i)
                if (model.keys[i] == key) l = i;
            if (l < 0) {
                for (int i = 0; i < model.omega; ++i)
                    if (model.keys[i].geo.empty()) {
                        model.keys[i] = key;
                        l = i;
                        break;
                    }
            }
            if (l < 0) throw Error("model bundle: too many series in means file");
            const int i = static_cast<int>(parse_long(row[ci], "age_index"));
            model.mean[l * model.p + i] = parse_double(row[cv], "mean value");
        }
    }
    {
        const CsvTable evals = read_csv(meta_path(stem, "eigenvalues"));
        const int cv = evals.column("value");
        model.eigenvalues.resize(evals.rows.size());
        for (std::size_t k = 0; k < evals.rows.size(); ++k)
            model.eigenvalues[k] = parse_double(evals.rows[k][cv], "eigenvalue");
    }
    {
        const CsvTable efuns = read_csv(meta_path(stem, "eigenfunctions"));
        const int ckk = efuns.column("k"), cs = efuns.column("series"),
                  ci = efuns.column("age_index"), cv = efuns.column("value");
        model.eigenfunctions.resize(static_cast<Eigen::Index>(model.omega) * model.p,
                                    model.eigenvalues.size());
        for (const auto& row : efuns.rows) {
            const int k = static_cast<int>(parse_long(row[ckk], "k")) - 1;
            const SeriesKey key = SeriesKey::parse(row[cs]);
            int l = -1;
            for (int i = 0; i < model.omega; ++i)
                if (model.keys[i] == key) l = i;
            if (l < 0) throw Error("model bundle: unknown series in eigenfunctions");
            const int i = static_cast<int>(parse_long(row[ci], "age_index"));
            model.eigenfunctions(l * model.p + i, k) = parse_double(row[cv], "eigenfunction");
        }
    }
    {
        const CsvTable sc = read_csv(meta_path(stem, "scores"));
        const int cy = sc.column("year"), ckk = sc.column("k"), cv = sc.column("value");
        std::vector<int> years;
        for (const auto& row : sc.rows) {
            const int year = static_cast<int>(parse_long(row[cy], "year"));
            if (years.empty() || years.back() != year) years.push_back(year);
        }
        model.years = years;
        model.scores.resize(years.size(), model.eigenvalues.size());
        std::size_t t = 0;
        for (const auto& row : sc.rows) {
            const int year = static_cast<int>(parse_long(row[cy], "year"));
            while (model.years[t] != year) ++t;
            const int k = static_cast<int>(parse_long(row[ckk], "k")) - 1;
            model.scores(t, k) = parse_double(row[cv], "score");
        }
    }
    const double total = model.eigenvalues.sum();
    model.explained.resize(model.eigenvalues.size());
    double cum = 0.0;
    for (int i = 0; i < model.eigenvalues.size(); ++i) {
        cum += model.eigenvalues[i];
        model.explained[i] = total > 0.0 ? cum / total : 1.0;
    }
    return model;
}

} // namespace mfts
