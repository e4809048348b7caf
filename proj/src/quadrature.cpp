#include "doi/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace doi {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights the
// squared first eigenvector components times the zeroth moment.
void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, double mu0,
                  std::vector<double>& x, std::vector<double>& w)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw std::runtime_error("quadrature: eigensolver failed");
    const int M = static_cast<int>(diag.size());
    x.resize(M);
    w.resize(M);
    for (int i = 0; i < M; ++i) {  // eigenvalues come sorted ascending
        x[i] = es.eigenvalues()(i);
        double v = es.eigenvectors()(0, i);
        w[i] = mu0 * v * v;
    }
}

} // namespace

Quadrature build_quadrature(int n, int M)
{
    if (n < 2) throw std::invalid_argument("build_quadrature: n must be >= 2");
    if (M < 4) throw std::invalid_argument("build_quadrature: order must be >= 4");

    // symmetric Jacobi weight (1-x)^a (1+x)^a with a = (n-3)/2
    const double a = 0.5 * (n - 3);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd sub(M - 1);
    for (int k = 1; k < M; ++k) {
        double beta;
        if (k == 1) {
            beta = 4.0 * (1 + a) * (1 + a) / ((2 + 2 * a) * (2 + 2 * a) * (3 + 2 * a));
        } else {
            double s = 2.0 * k + 2 * a;
            beta = 4.0 * k * (k + a) * (k + a) * (k + 2 * a) / (s * s * (s + 1) * (s - 1));
        }
        sub(k - 1) = std::sqrt(beta);
    }

    Quadrature q;
    q.n = n;
    golub_welsch(diag, sub, 1.0, q.nodes, q.weights);

    // enforce exact reflection symmetry, then the unit mass
    for (int i = 0; i < M / 2; ++i) {
        int j = M - 1 - i;
        double xs = 0.5 * (q.nodes[j] - q.nodes[i]);
        double ws = 0.5 * (q.weights[i] + q.weights[j]);
        q.nodes[i] = -xs;
        q.nodes[j] = xs;
        q.weights[i] = q.weights[j] = ws;
    }
    if (M % 2 == 1) q.nodes[M / 2] = 0.0;
    double sum = 0.0;
    for (int i = 0; i < M / 2; ++i) sum += 2.0 * q.weights[i];
    if (M % 2 == 1) sum += q.weights[M / 2];
    for (double& w : q.weights) w /= sum;
    return q;
}

LaguerreRule build_gauss_laguerre(double a, int M)
{
    if (!(a > -1.0)) throw std::invalid_argument("build_gauss_laguerre: need a > -1");
    if (M < 2) throw std::invalid_argument("build_gauss_laguerre: order must be >= 2");
    Eigen::VectorXd diag(M), sub(M - 1);
    for (int k = 0; k < M; ++k) diag(k) = 2.0 * k + a + 1.0;
    for (int k = 1; k < M; ++k) sub(k - 1) = std::sqrt(k * (k + a));
    LaguerreRule r;
    golub_welsch(diag, sub, std::tgamma(a + 1.0), r.nodes, r.weights);
    return r;
}

} // namespace doi
