#include "invar3/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace invar3 {

JetSolution solve(const std::vector<Jet2>& A, const std::vector<Jet2>& b)
{
    const auto n = static_cast<Eigen::Index>(b.size());
    if (static_cast<Eigen::Index>(A.size()) != n * n)
        throw std::invalid_argument("solve: matrix and right-hand side sizes differ");
    int K = Jet2::kMaxOrder;
    for (const auto& a : A)
        K = std::min(K, a.order());
    for (const auto& v : b)
        K = std::min(K, v.order());

    const std::size_t m = Jet2::size_for(K);
    std::vector<Eigen::MatrixXd> Ak(m, Eigen::MatrixXd(n, n));
    std::vector<Eigen::VectorXd> bk(m, Eigen::VectorXd(n));
    for (std::size_t k = 0; k < m; ++k) {
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c)
                Ak[k](r, c) = A[static_cast<std::size_t>(r * n + c)][k];
            bk[k](r) = b[static_cast<std::size_t>(r)][k];
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Ak[0]);
    const double det = lu.determinant();
    const double scale = Ak[0].cwiseAbs().maxCoeff();
    JetSolution out;
    out.determinant = det;
    if (!(scale > 0.0) || !std::isfinite(det) || std::abs(det) <= std::pow(scale * 1e-14, static_cast<double>(n)))
        throw SingularSystem("singular linear system");
    const Eigen::MatrixXd inv = lu.inverse();
    const double n1 = Ak[0].cwiseAbs().colwise().sum().maxCoeff();
    const double ni = inv.cwiseAbs().colwise().sum().maxCoeff();
    out.cond1 = n1 * ni;
    if (!std::isfinite(out.cond1))
        throw SingularSystem("singular linear system");

    std::vector<Eigen::VectorXd> xk(m, Eigen::VectorXd::Zero(n));
    for (int d = 0; d <= K; ++d)
        for (int j = 0; j <= d; ++j) {
            const int i = d - j;
            Eigen::VectorXd rhs = bk[Jet2::index(i, j)];
            for (int p = 0; p <= i; ++p)
                for (int q = 0; q <= j; ++q) {
                    if (p == 0 && q == 0)
                        continue;
                    rhs -= Ak[Jet2::index(p, q)] * xk[Jet2::index(i - p, j - q)];
                }
            xk[Jet2::index(i, j)] = lu.solve(rhs);
        }

    out.x.assign(static_cast<std::size_t>(n), Jet2(K));
    for (Eigen::Index r = 0; r < n; ++r)
        for (std::size_t k = 0; k < m; ++k)
            out.x[static_cast<std::size_t>(r)][k] = xk[k](r);
    return out;
}

} // namespace invar3
