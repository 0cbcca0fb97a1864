#include "dcon/bvls.hpp"

#include <cmath>
#include <vector>

namespace dcon {

namespace {
enum class Bound { lower, upper, free, fixed };
}

BvlsResult bvls(const Eigen::MatrixXd& A, const Eigen::VectorXd& r, const Eigen::VectorXd& lo,
                const Eigen::VectorXd& hi, int max_iters) {
    const Eigen::Index k = A.cols();
    if (max_iters <= 0) max_iters = static_cast<int>(10 * k + 50);
    BvlsResult res;
    res.t = lo;
    std::vector<Bound> st(static_cast<std::size_t>(k), Bound::lower);
    for (Eigen::Index j = 0; j < k; ++j)
        if (hi(j) <= lo(j)) st[j] = Bound::fixed;

    const double scale = A.cwiseAbs().maxCoeff() * (r.cwiseAbs().maxCoeff() + 1.0) + 1e-300;
    const double grad_tol = 1e-14 * scale * static_cast<double>(k + 1);
    std::vector<char> tabu(static_cast<std::size_t>(k), 0);

    int it = 0;
    for (; it < max_iters; ++it) {
        const Eigen::VectorXd w = A.transpose() * (r - A * res.t);
        Eigen::Index pick = -1;
        double best = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            if (tabu[j]) continue;
            double gain = 0.0;
            if (st[j] == Bound::lower && w(j) > grad_tol) gain = w(j);
            if (st[j] == Bound::upper && w(j) < -grad_tol) gain = -w(j);
            if (gain > best) {
                best = gain;
                pick = j;
            }
        }
        if (pick < 0) {
            // only variables that refused to move may still violate KKT
            res.optimal = true;
            for (Eigen::Index j = 0; j < k; ++j)
                if (tabu[j] && ((st[j] == Bound::lower && w(j) > grad_tol) ||
                                (st[j] == Bound::upper && w(j) < -grad_tol)))
                    res.optimal = false;
            break;
        }
        const Bound was = st[pick];
        st[pick] = Bound::free;

        bool moved = false;
        for (int inner = 0; inner <= k + 1; ++inner) {
            std::vector<Eigen::Index> F;
            Eigen::VectorXd rhs = r;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (st[j] == Bound::free)
                    F.push_back(j);
                else
                    rhs -= A.col(j) * res.t(j);
            }
            if (F.empty()) break;
            Eigen::MatrixXd AF(A.rows(), static_cast<Eigen::Index>(F.size()));
            for (std::size_t i = 0; i < F.size(); ++i) AF.col(static_cast<Eigen::Index>(i)) = A.col(F[i]);
            const Eigen::VectorXd zF = AF.completeOrthogonalDecomposition().solve(rhs);

            if (inner == 0) {
                // the freed variable must move away from its bound, otherwise undo
                Eigen::Index pos = 0;
                while (F[pos] != pick) ++pos;
                const double dir = zF(pos) - res.t(pick);
                if ((was == Bound::lower && dir <= 0.0) || (was == Bound::upper && dir >= 0.0)) {
                    st[pick] = was;
                    tabu[pick] = 1;
                    break;
                }
            }
            double step = 1.0;
            for (std::size_t i = 0; i < F.size(); ++i) {
                const Eigen::Index j = F[i];
                const double tj = res.t(j), zj = zF(static_cast<Eigen::Index>(i));
                if (zj < lo(j)) step = std::min(step, (lo(j) - tj) / (zj - tj));
                if (zj > hi(j)) step = std::min(step, (hi(j) - tj) / (zj - tj));
            }
            step = std::max(step, 0.0);
            for (std::size_t i = 0; i < F.size(); ++i) {
                const Eigen::Index j = F[i];
                res.t(j) += step * (zF(static_cast<Eigen::Index>(i)) - res.t(j));
            }
            moved = true;
            if (step >= 1.0) break;
            for (std::size_t i = 0; i < F.size(); ++i) {
                const Eigen::Index j = F[i];
                const double span = hi(j) - lo(j);
                if (res.t(j) <= lo(j) + 1e-14 * span) {
                    res.t(j) = lo(j);
                    st[j] = Bound::lower;
                } else if (res.t(j) >= hi(j) - 1e-14 * span) {
                    res.t(j) = hi(j);
                    st[j] = Bound::upper;
                }
            }
        }
        if (moved) std::fill(tabu.begin(), tabu.end(), 0);
    }
    res.iterations = it;
    res.t = res.t.cwiseMax(lo).cwiseMin(hi);
    res.residual_norm = (A * res.t - r).norm();
    return res;
}

}  // namespace dcon
