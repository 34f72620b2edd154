#include "modalsim/pointer.hpp"

#include "modalsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace modalsim::pointer {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void require_probabilities(const Eigen::VectorXd& p, const char* who) {
    if (p.size() < 1) throw std::invalid_argument(std::string(who) + ": empty probability vector");
    for (Eigen::Index j = 0; j < p.size(); ++j)
        if (!(p(j) >= 0.0) || !std::isfinite(p(j)))
            throw std::invalid_argument(std::string(who) + ": probability " + std::to_string(j) + " is negative or not finite");
    if (std::abs(p.sum() - 1.0) > 1e-10)
        throw std::invalid_argument(std::string(who) + ": probabilities sum to " + fmt(p.sum()) + ", expected 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// LogOverlap
// ---------------------------------------------------------------------------

LogOverlap LogOverlap::from_value(cplx v) {
    const double mag = std::abs(v);
    return {mag > 0.0 ? std::log(mag) : -std::numeric_limits<double>::infinity(), mag > 0.0 ? std::arg(v) : 0.0};
}

cplx LogOverlap::value() const {
    if (underflows()) return {0.0, 0.0};
    return std::polar(std::exp(log_magnitude), phase);
}

// ---------------------------------------------------------------------------
// PointerFamily
// ---------------------------------------------------------------------------

PointerFamily::PointerFamily(int n_outcomes, int embedding_dim, Schedule schedule)
    : n_outcomes_(n_outcomes), embedding_dim_(embedding_dim), schedule_(std::move(schedule)) {
    if (n_outcomes_ < 1) throw std::invalid_argument("PointerFamily: n_outcomes must be positive");
    if (embedding_dim_ < n_outcomes_)
        throw std::invalid_argument("PointerFamily: embedding_dim must be at least n_outcomes");
    if (!schedule_) throw std::invalid_argument("PointerFamily: overlap schedule is empty");
}

LogOverlap PointerFamily::log_overlap(int i, int j, double t) const {
    if (i < 0 || j < 0 || i >= n_outcomes_ || j >= n_outcomes_)
        throw std::out_of_range("PointerFamily::log_overlap: outcome index out of range");
    if (i == j) return {};
    if (i < j) return schedule_(i, j, t);
    LogOverlap o = schedule_(j, i, t);
    o.phase = -o.phase;
    return o;
}

Eigen::MatrixXcd PointerFamily::gram(double t) const {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(n_outcomes_, n_outcomes_);
    for (int i = 0; i < n_outcomes_; ++i)
        for (int j = i + 1; j < n_outcomes_; ++j) {
            const cplx v = schedule_(i, j, t).value();
            g(i, j) = v;
            g(j, i) = std::conj(v);
        }
    return g;
}

PointerFamily default_pointer_family(const Eigen::VectorXd& positions, double n_constituents, double epsilon,
                                     double t_rise, int embedding_dim) {
    if (!(n_constituents >= 1.0)) throw std::invalid_argument("default_pointer_family: N must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("default_pointer_family: epsilon must be positive");
    if (!(t_rise > 0.0)) throw std::invalid_argument("default_pointer_family: t_rise must be positive");
    const int n = static_cast<int>(positions.size());
    const Eigen::VectorXd x = positions;
    auto schedule = [x, n_constituents, epsilon, t_rise](int i, int j, double t) {
        const double s = t / t_rise;
        const double d = (x(i) - x(j)) / epsilon;
        return LogOverlap{-s * s * n_constituents * d * d, 0.0};
    };
    return PointerFamily(n, embedding_dim < 0 ? n : embedding_dim, schedule);
}

PointerFamily orthogonal_pointer_family(int n_outcomes, int embedding_dim) {
    auto schedule = [](int, int, double) {
        return LogOverlap{-std::numeric_limits<double>::infinity(), 0.0};
    };
    return PointerFamily(n_outcomes, embedding_dim < 0 ? n_outcomes : embedding_dim, schedule);
}

// ---------------------------------------------------------------------------
// Realization
// ---------------------------------------------------------------------------

RealizedPointers realize_gram(const Eigen::MatrixXcd& gram, int embedding_dim, double tol) {
    const int n = static_cast<int>(gram.rows());
    if (n < 1 || gram.cols() != n) throw std::invalid_argument("realize_gram: Gram matrix must be square and non-empty");
    if (!gram.allFinite()) throw std::invalid_argument("realize_gram: Gram matrix has non-finite entries");
    if (linalg::hermiticity_defect(gram) > 1e-12) throw std::invalid_argument("realize_gram: Gram matrix is not Hermitian");

    auto indefinite = [&](const std::string& why) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (gram + gram.adjoint()), Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        return GramIndefinite("Gram matrix is not positive semidefinite (" + why + "; smallest eigenvalue " +
                                  fmt(lmin) + ")",
                              lmin);
    };

    Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXd d = gram.diagonal().real();
    std::vector<bool> used(n, false);
    RealizedPointers out;
    for (int k = 0; k < n; ++k) {
        int piv = -1;
        for (int i = 0; i < n; ++i)
            if (!used[i] && (piv < 0 || d(i) > d(piv))) piv = i;
        if (d(piv) <= tol) break;
        const double lp = std::sqrt(d(piv));
        used[piv] = true;
        out.pivot_order.push_back(piv);
        l(piv, k) = lp;
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            cplx s = gram(j, piv);
            for (int q = 0; q < k; ++q) s -= l(j, q) * std::conj(l(piv, q));
            l(j, k) = s / lp;
            d(j) -= std::norm(l(j, k));
        }
        ++out.rank;
    }

    // The unfactored remainder must vanish within tolerance.
    for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        if (d(j) < -tol) throw indefinite("negative Schur-complement diagonal " + fmt(d(j)));
        for (int m = 0; m < n; ++m) {
            if (used[m] || m == j) continue;
            cplx s = gram(j, m);
            for (int q = 0; q < out.rank; ++q) s -= l(j, q) * std::conj(l(m, q));
            if (std::abs(s) > tol) throw indefinite("residual off-diagonal " + fmt(std::abs(s)));
        }
    }

    if (out.rank > embedding_dim)
        throw std::invalid_argument("realize_gram: Gram rank " + std::to_string(out.rank) + " exceeds embedding_dim " +
                                    std::to_string(embedding_dim));
    out.vectors = Eigen::MatrixXcd::Zero(embedding_dim, n);
    out.vectors.topRows(out.rank) = l.leftCols(out.rank).adjoint();
    out.reconstruction_error = (out.vectors.adjoint() * out.vectors - gram).cwiseAbs().maxCoeff();
    return out;
}

RealizedPointers realize_pointer_states(const PointerFamily& family, double t, double tol) {
    return realize_gram(family.gram(t), family.embedding_dim(), tol);
}

PointerOverlap pointer_overlap(double n_constituents, double distance, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("pointer_overlap: resolution must be positive");
    if (!(n_constituents >= 1.0)) throw std::invalid_argument("pointer_overlap: N must be >= 1");
    if (!(distance >= 0.0)) throw std::invalid_argument("pointer_overlap: distance must be non-negative");
    const double r = distance / resolution;
    const double exponent = -n_constituents * r * r;
    return {exponent, exponent < kUnderflowExponent ? 0.0 : std::exp(exponent)};
}

double collapse_time(double duration, double epsilon, double distance, double n_constituents) {
    if (!(duration > 0.0) || !(epsilon > 0.0) || !(distance > 0.0) || !(n_constituents > 0.0))
        throw std::invalid_argument("collapse_time: all arguments must be positive");
    return duration * epsilon / (distance * std::sqrt(n_constituents));
}

linalg::DensityMatrix collapse_rho(const Eigen::VectorXd& p, const PointerFamily& family, double t) {
    require_probabilities(p, "collapse_rho");
    if (p.size() != family.n_outcomes())
        throw std::invalid_argument("collapse_rho: probability count does not match the pointer family");
    const RealizedPointers v = realize_pointer_states(family, t);
    Eigen::MatrixXcd rho = v.vectors * p.cast<cplx>().asDiagonal() * v.vectors.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return linalg::DensityMatrix(std::move(rho));
}

// ---------------------------------------------------------------------------
// Crossover
// ---------------------------------------------------------------------------

void CrossoverParams::validate() const {
    if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("CrossoverParams: p0 must lie in (0, 1)");
    if (!(a != 0.0) || !std::isfinite(a)) throw std::invalid_argument("CrossoverParams: a must be non-zero and finite");
    if (!std::isfinite(delta.real()) || !std::isfinite(delta.imag()) || !std::isfinite(t0))
        throw std::invalid_argument("CrossoverParams: delta and t0 must be finite");
}

CrossoverPoint crossover_spectrum(const CrossoverParams& params, double t) {
    params.validate();
    const double as = params.a * (t - params.t0);
    const double d = params.p0 * std::abs(params.delta);
    const double r = std::hypot(as, d);

    CrossoverPoint out{};
    out.p_plus = params.p0 + r;
    out.p_minus = params.p0 - r;
    out.delta_phase = std::abs(params.delta) > 0.0 ? std::arg(params.delta) : 0.0;
    out.exact_crossing = (d == 0.0);
    if (d == 0.0) {
        out.degenerate_point = (as == 0.0);
        out.theta = as > 0.0 ? std::numbers::pi / 2 : (as < 0.0 ? 0.0 : std::numbers::pi / 4);
        return out;
    }
    // as + r loses all digits when as << 0; use (r^2 - as^2)/(r - as) there.
    const double num = as >= 0.0 ? as + r : d * d / (r - as);
    out.theta = std::atan2(num, d);
    out.degenerate_point = false;
    return out;
}

Eigen::Matrix2cd crossover_matrix(const CrossoverParams& params, double t) {
    params.validate();
    const double as = params.a * (t - params.t0);
    Eigen::Matrix2cd m;
    m << params.p0 + as, params.p0 * params.delta, params.p0 * std::conj(params.delta), params.p0 - as;
    return m;
}

// ---------------------------------------------------------------------------
// Environment-split blocks
// ---------------------------------------------------------------------------

double BlockModel::block_norm(int j, double t) const {
    const Eigen::VectorXcd z = weights(j, t);
    const Eigen::MatrixXcd m = pointer_gram(j, t);
    const Eigen::MatrixXcd e = env_gram(j, t);
    cplx s = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a)
        for (Eigen::Index b = 0; b < z.size(); ++b) s += std::conj(z(a)) * z(b) * m(a, b) * e(a, b);
    return s.real();
}

void BlockModel::validate(double t) const {
    require_probabilities(outer_probs, "BlockModel");
    if (static_cast<int>(block_sizes.size()) != n_blocks())
        throw std::invalid_argument("BlockModel: block_sizes must have one entry per outer probability");
    if (!weights || !pointer_gram || !env_gram) throw std::invalid_argument("BlockModel: schedules must be set");
    for (int j = 0; j < n_blocks(); ++j) {
        const int m = block_sizes[j];
        if (m < 1) throw std::invalid_argument("BlockModel: block sizes must be positive");
        if (weights(j, t).size() != m || pointer_gram(j, t).rows() != m || pointer_gram(j, t).cols() != m ||
            env_gram(j, t).rows() != m || env_gram(j, t).cols() != m)
            throw std::invalid_argument("BlockModel: schedule shapes do not match block " + std::to_string(j));
        const double nrm = block_norm(j, t);
        if (std::abs(nrm - 1.0) > 1e-10)
            throw std::invalid_argument("BlockModel: block " + std::to_string(j) + " normalization is " + fmt(nrm) +
                                        " at t = " + fmt(t));
    }
}

BlockRho split_block_rho(const BlockModel& model, double t) {
    model.validate(t);
    const int nb = model.n_blocks();
    int total = 0;
    std::vector<int> offsets(nb);
    for (int j = 0; j < nb; ++j) {
        offsets[j] = total;
        total += model.block_sizes[j];
    }

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(total, total);
    std::vector<int> block_of(total);
    std::vector<Eigen::MatrixXcd> blocks;
    std::vector<double> traces;
    for (int j = 0; j < nb; ++j) {
        const int m = model.block_sizes[j];
        const Eigen::VectorXcd z = model.weights(j, t);
        const Eigen::MatrixXcd e = model.env_gram(j, t);
        const RealizedPointers v = realize_gram(model.pointer_gram(j, t), m);
        // Coefficient of |M_aj><M_bj| obtained by tracing |Psi><Psi| over the
        // particle and environment: p_j Z_aj conj(Z_bj) <E_bj|E_aj>.
        Eigen::MatrixXcd c(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) c(a, b) = model.outer_probs(j) * z(a) * std::conj(z(b)) * e(b, a);
        Eigen::MatrixXcd block = v.vectors * c * v.vectors.adjoint();
        block = 0.5 * (block + block.adjoint()).eval();
        rho.block(offsets[j], offsets[j], m, m) = block;
        for (int a = 0; a < m; ++a) block_of[offsets[j] + a] = j;
        traces.push_back(block.trace().real());
        blocks.push_back(std::move(block));
    }
    return BlockRho{linalg::DensityMatrix(std::move(rho)), std::move(block_of), std::move(offsets), std::move(blocks),
                    std::move(traces)};
}

// ---------------------------------------------------------------------------
// Imperfect devices
// ---------------------------------------------------------------------------

int ImperfectDevice::n_labels() const {
    int s = 0;
    for (int mi : m) s += mi;
    return s;
}

int ImperfectDevice::label(int a, int i) const {
    if (i < 0 || i >= n_outcomes() || a < 0 || a >= m[i]) throw std::out_of_range("ImperfectDevice::label");
    int off = 0;
    for (int k = 0; k < i; ++k) off += m[k];
    return off + a;
}

int ImperfectDevice::outcome_of(int l) const {
    int off = 0;
    for (int i = 0; i < n_outcomes(); ++i) {
        if (l < off + m[i]) return i;
        off += m[i];
    }
    throw std::out_of_range("ImperfectDevice::outcome_of");
}

void ImperfectDevice::validate_shapes() const {
    if (m.empty()) throw std::invalid_argument("ImperfectDevice: at least one device outcome is required");
    for (int mi : m)
        if (mi < 1) throw std::invalid_argument("ImperfectDevice: sub-state counts must be positive");
    const int nl = n_labels();
    const Eigen::Index np = p.size();
    if (np < 1) throw std::invalid_argument("ImperfectDevice: empty particle probability vector");
    if (static_cast<Eigen::Index>(z.size()) != np || static_cast<Eigen::Index>(env_gram.size()) != np)
        throw std::invalid_argument("ImperfectDevice: need one weight vector and one env Gram per particle index");
    for (Eigen::Index j = 0; j < np; ++j) {
        if (!(p(j) >= 0.0)) throw std::invalid_argument("ImperfectDevice: negative particle probability");
        if (z[j].size() != nl) throw std::invalid_argument("ImperfectDevice: weight vector has wrong length");
        if (env_gram[j].rows() != nl || env_gram[j].cols() != nl)
            throw std::invalid_argument("ImperfectDevice: env Gram has wrong shape");
        if (linalg::hermiticity_defect(env_gram[j]) > 1e-12)
            throw std::invalid_argument("ImperfectDevice: env Gram is not Hermitian");
    }
}

Eigen::MatrixXcd imperfect_device_rho(const ImperfectDevice& device) {
    device.validate_shapes();
    const int nl = device.n_labels();
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(nl, nl);
    for (Eigen::Index j = 0; j < device.p.size(); ++j) {
        const Eigen::VectorXcd& z = device.z[j];
        const Eigen::MatrixXcd& g = device.env_gram[j];
        for (int l = 0; l < nl; ++l)
            for (int lp = 0; lp < nl; ++lp) rho(l, lp) += device.p(j) * z(l) * std::conj(z(lp)) * g(lp, l);
    }
    return 0.5 * (rho + rho.adjoint());
}

Eigen::VectorXd imperfect_measurement_blocks(const ImperfectDevice& device, double tol) {
    device.validate_shapes();
    Eigen::VectorXd blocks = Eigen::VectorXd::Zero(device.n_outcomes());
    for (Eigen::Index j = 0; j < device.p.size(); ++j)
        for (int l = 0; l < device.n_labels(); ++l)
            blocks(device.outcome_of(l)) += device.p(j) * std::norm(device.z[j](l)) * device.env_gram[j](l, l).real();
    // The norm of the full state is the trace of the device density matrix.
    const double norm = imperfect_device_rho(device).trace().real();
    if (std::abs(norm - 1.0) > tol)
        throw std::invalid_argument("imperfect_measurement_blocks: total state norm^2 is " + fmt(norm) +
                                    " (deviation exceeds " + fmt(tol) + ")");
    return blocks;
}

double max_cross_block_component(const linalg::SpectralDecomposition& spectrum, const std::vector<int>& block_of,
                                 double min_probability) {
    if (static_cast<Eigen::Index>(block_of.size()) != spectrum.vectors.rows())
        throw std::invalid_argument("max_cross_block_component: block map size mismatch");
    int nb = 0;
    for (int b : block_of) nb = std::max(nb, b + 1);
    double worst = 0.0;
    for (int k = 0; k < spectrum.size(); ++k) {
        if (spectrum.probabilities(k) <= min_probability) continue;
        std::vector<double> w(nb, 0.0);
        for (Eigen::Index r = 0; r < spectrum.vectors.rows(); ++r) w[block_of[r]] += std::norm(spectrum.vectors(r, k));
        const auto dom = std::max_element(w.begin(), w.end()) - w.begin();
        double outside = 0.0;
        for (int b = 0; b < nb; ++b)
            if (b != dom) outside += w[b];
        worst = std::max(worst, std::sqrt(outside));
    }
    return worst;
}

}  // namespace modalsim::pointer
