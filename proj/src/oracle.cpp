#include "cqeo/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "cqeo/philox.hpp"
#include "cqeo/solver.hpp"

namespace cqeo {

namespace {

// Running mean and centered second moment, mergeable in any tree order.
struct Moments {
    std::size_t n = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd m2;

    explicit Moments(Eigen::Index dim = 0) : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::MatrixXd::Zero(dim, dim)) {}

    void add(const Eigen::VectorXd& x) {
        ++n;
        const Eigen::VectorXd delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2.noalias() += delta * (x - mean).transpose();
    }

    static Moments merge(const Moments& a, const Moments& b) {
        if (a.n == 0) return b;
        if (b.n == 0) return a;
        Moments out;
        out.n = a.n + b.n;
        const double na = static_cast<double>(a.n), nb = static_cast<double>(b.n), n = static_cast<double>(out.n);
        const Eigen::VectorXd delta = b.mean - a.mean;
        out.mean = a.mean + delta * (nb / n);
        out.m2 = a.m2 + b.m2 + delta * delta.transpose() * (na * nb / n);
        return out;
    }

    Eigen::MatrixXd covariance() const {
        const Eigen::MatrixXd c = m2 / static_cast<double>(n > 1 ? n - 1 : 1);
        return 0.5 * (c + c.transpose());
    }
};

Moments pairwise_merge(const std::vector<Moments>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return parts[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return Moments::merge(pairwise_merge(parts, lo, mid), pairwise_merge(parts, mid, hi));
}

// Pooled estimate plus delete-one-block jackknife over contiguous trajectory blocks.
MomentEstimate estimate(const std::vector<Moments>& per_trajectory) {
    const std::size_t n_traj = per_trajectory.size();
    const std::size_t n_blocks = std::min<std::size_t>(n_traj, 64);
    std::vector<Moments> blocks;
    blocks.reserve(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        blocks.push_back(pairwise_merge(per_trajectory, b * n_traj / n_blocks, (b + 1) * n_traj / n_blocks));
    }
    const Moments total = pairwise_merge(blocks, 0, n_blocks);
    const auto dim = total.mean.size();

    std::vector<Moments> prefix(n_blocks + 1, Moments(dim)), suffix(n_blocks + 1, Moments(dim));
    for (std::size_t b = 0; b < n_blocks; ++b) prefix[b + 1] = Moments::merge(prefix[b], blocks[b]);
    for (std::size_t b = n_blocks; b-- > 0;) suffix[b] = Moments::merge(blocks[b], suffix[b + 1]);

    auto occupations = [](const Eigen::MatrixXd& c) {
        Eigen::VectorXd occ(c.rows() / 2);
        for (Eigen::Index m = 0; m < occ.size(); ++m) occ(m) = 0.5 * (c(2 * m, 2 * m) + c(2 * m + 1, 2 * m + 1)) - 0.5;
        return occ;
    };

    std::vector<Eigen::MatrixXd> cov_loo;
    std::vector<Eigen::VectorXd> mean_loo;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const Moments rest = Moments::merge(prefix[b], suffix[b + 1]);
        cov_loo.push_back(rest.covariance());
        mean_loo.push_back(rest.mean);
    }
    Eigen::MatrixXd cov_bar = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd mean_bar = Eigen::VectorXd::Zero(dim);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        cov_bar += cov_loo[b];
        mean_bar += mean_loo[b];
    }
    cov_bar /= static_cast<double>(n_blocks);
    mean_bar /= static_cast<double>(n_blocks);
    Eigen::MatrixXd cov_var = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd mean_var = Eigen::VectorXd::Zero(dim);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        cov_var += (cov_loo[b] - cov_bar).cwiseAbs2();
        mean_var += (mean_loo[b] - mean_bar).cwiseAbs2();
    }
    const double jk = static_cast<double>(n_blocks - 1) / static_cast<double>(n_blocks);
    Eigen::VectorXd occ_var = Eigen::VectorXd::Zero(dim / 2);
    const Eigen::VectorXd occ_bar = occupations(cov_bar);
    for (std::size_t b = 0; b < n_blocks; ++b) occ_var += (occupations(cov_loo[b]) - occ_bar).cwiseAbs2();

    MomentEstimate out;
    out.mean = total.mean;
    out.covariance = total.covariance();
    out.standard_errors = (jk * cov_var).cwiseSqrt();
    out.mean_standard_errors = (jk * mean_var).cwiseSqrt();
    out.n_samples = total.n;
    out.occupations = occupations(out.covariance);
    out.occupation_standard_errors = (jk * occ_var).cwiseSqrt();

    // Gaussian variance estimator: Var(s^2) = 2 sigma^4 / n_eff.
    double n_eff = 0.0;
    int counted = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double se = out.standard_errors(i, i);
        if (se > 0.0) {
            n_eff += 2.0 * out.covariance(i, i) * out.covariance(i, i) / (se * se);
            ++counted;
        }
    }
    out.n_effective = counted ? std::clamp(n_eff / counted, 1.0, static_cast<double>(total.n))
                              : static_cast<double>(total.n);
    return out;
}

struct Propagator {
    Eigen::MatrixXd transition;
    Eigen::MatrixXd noise_factor;  // w = noise_factor * z, z standard normal
};

Propagator make_propagator(const LinearQuantumSystemd& sys, double dt, Scheme scheme) {
    if (scheme == Scheme::Exact) {
        const auto step = discretize(sys.drift, sys.diffusion, dt);
        return {step.transition, factor_diffusion(step.noise)};
    }
    const auto n = sys.dim();
    return {Eigen::MatrixXd::Identity(n, n) + sys.drift * dt, factor_diffusion(sys.diffusion) * std::sqrt(dt)};
}

// Per-trajectory Philox key. The seed goes through a splitmix64 finalizer first so
// that nearby seeds do not share trajectory keys.
std::uint64_t trajectory_key(std::uint64_t seed, std::size_t trajectory) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return (z ^ (z >> 31)) ^ static_cast<std::uint64_t>(trajectory);
}

// Normal draws for (trajectory key, step, tag); independent across any of them.
void draw_normals(const Philox4x32& rng, std::uint64_t step, std::uint32_t tag, Eigen::VectorXd& z) {
    const auto n = z.size();
    for (Eigen::Index block = 0; 2 * block < n; ++block) {
        const auto pair = normal_pair(rng({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                           static_cast<std::uint32_t>(block), tag}));
        z(2 * block) = pair[0];
        if (2 * block + 1 < n) z(2 * block + 1) = pair[1];
    }
}

struct Start {
    Eigen::VectorXd mean;
    Eigen::MatrixXd factor;
};

Start make_start(const LinearQuantumSystemd& sys, const std::optional<GaussianStated>& initial) {
    const GaussianStated s = initial ? *initial : vacuum_state<double>(sys.basis);
    s.check_dimensions();
    if (!(s.basis == sys.basis)) throw DimensionMismatch("initial state basis differs from the system basis");
    return {s.mean, factor_diffusion(s.covariance)};
}

std::size_t step_count(double span, double dt) {
    return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

// Runs body(trajectory) for every trajectory on a small thread pool, rethrowing
// the first worker exception.
void for_each_trajectory(std::size_t n_traj, unsigned jobs, const std::function<void(std::size_t)>& body) {
    unsigned workers = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_traj));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= n_traj) return;
            try {
                body(t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_traj);
                return;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

class DivergenceGuard {
public:
    DivergenceGuard(const LinearQuantumSystemd& sys, const Start& start, double t_final) {
        const double scale = start.factor.squaredNorm() + sys.diffusion.trace() * t_final + start.mean.squaredNorm();
        limit_ = 1e30 * std::sqrt(1.0 + scale);
    }

    void check(const Eigen::VectorXd& u, std::size_t trajectory, double time) const {
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > limit_) {
            throw EnsembleDivergence("trajectory " + std::to_string(trajectory) + " diverged at t = " + std::to_string(time) +
                                     " s; the drift is not stable");
        }
    }

private:
    double limit_ = 0.0;
};

}  // namespace

void TrajectoryEnsembleSpec::validate() const {
    if (n_trajectories < 2) throw InvalidParameter("need at least 2 trajectories");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
    if (!(burn_in >= 0.0)) throw InvalidParameter("burn_in must be nonnegative");
    if (!(t_final > burn_in) || !std::isfinite(t_final)) throw InvalidParameter("t_final must exceed burn_in");
    if (sample_stride == 0) throw InvalidParameter("sample_stride must be positive");
}

MomentEstimate simulate_ensemble(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec,
                                 const std::optional<GaussianStated>& initial) {
    spec.validate();
    sys.check_dimensions();
    const auto n = sys.dim();
    const Propagator prop = make_propagator(sys, spec.dt, spec.scheme);
    const Start start = make_start(sys, initial);
    const DivergenceGuard guard(sys, start, spec.t_final);
    const std::size_t n_steps = step_count(spec.t_final, spec.dt);
    const std::size_t first_sample = step_count(spec.burn_in, spec.dt);

    std::vector<Moments> per_traj(spec.n_trajectories, Moments(n));
    std::vector<std::string> dumps(spec.trajectory_dump ? spec.n_trajectories : 0);

    for_each_trajectory(spec.n_trajectories, spec.jobs, [&](std::size_t t) {
        const Philox4x32 rng(trajectory_key(spec.seed, t));
        Eigen::VectorXd z(n), u(n), next(n);
        std::ostringstream dump;
        dump.precision(17);
        draw_normals(rng, 0, 0, z);
        u = start.mean + start.factor * z;
        Moments acc(n);
        for (std::size_t k = 0; k <= n_steps; ++k) {
            if (k > 0) {
                draw_normals(rng, k, 0, z);
                next.noalias() = prop.transition * u;
                next.noalias() += prop.noise_factor * z;
                u.swap(next);
                guard.check(u, t, static_cast<double>(k) * spec.dt);
            }
            if (k >= first_sample && (k - first_sample) % spec.sample_stride == 0) {
                acc.add(u);
                if (spec.trajectory_dump) {
                    dump << t << ',' << static_cast<double>(k) * spec.dt;
                    for (Eigen::Index i = 0; i < n; ++i) dump << ',' << u(i);
                    dump << '\n';
                }
            }
        }
        per_traj[t] = std::move(acc);
        if (spec.trajectory_dump) dumps[t] = dump.str();
    });

    if (spec.trajectory_dump) {
        auto& os = *spec.trajectory_dump;
        os << "trajectory_id,time_s";
        for (const auto& label : sys.basis.labels()) os << ',' << label;
        os << '\n';
        for (const auto& d : dumps) os << d;
    }
    return estimate(per_traj);
}

std::vector<MomentEstimate> simulate_snapshots(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec,
                                               const std::vector<double>& times,
                                               const std::optional<GaussianStated>& initial) {
    spec.validate();
    sys.check_dimensions();
    if (times.empty()) throw InvalidParameter("no snapshot times given");
    const auto n = sys.dim();
    std::vector<std::size_t> steps;
    for (double t : times) {
        const double k = t / spec.dt;
        const double rounded = std::round(k);
        if (t < 0.0 || std::abs(k - rounded) > 1e-6 * std::max(1.0, k) || t > spec.t_final * (1.0 + 1e-12)) {
            throw InvalidParameter("snapshot time " + std::to_string(t) + " s is not a step time within t_final");
        }
        steps.push_back(static_cast<std::size_t>(rounded));
    }
    const std::size_t last = *std::max_element(steps.begin(), steps.end());
    const Propagator prop = make_propagator(sys, spec.dt, spec.scheme);
    const Start start = make_start(sys, initial);
    const DivergenceGuard guard(sys, start, spec.t_final);

    // samples[s][t]: one-sample Moments of trajectory t at snapshot s.
    std::vector<std::vector<Moments>> samples(steps.size(), std::vector<Moments>(spec.n_trajectories, Moments(n)));
    for_each_trajectory(spec.n_trajectories, spec.jobs, [&](std::size_t t) {
        const Philox4x32 rng(trajectory_key(spec.seed, t));
        Eigen::VectorXd z(n), u(n), next(n);
        draw_normals(rng, 0, 0, z);
        u = start.mean + start.factor * z;
        for (std::size_t k = 0; k <= last; ++k) {
            if (k > 0) {
                draw_normals(rng, k, 0, z);
                next.noalias() = prop.transition * u;
                next.noalias() += prop.noise_factor * z;
                u.swap(next);
                guard.check(u, t, static_cast<double>(k) * spec.dt);
            }
            for (std::size_t s = 0; s < steps.size(); ++s) {
                if (steps[s] == k) samples[s][t].add(u);
            }
        }
    });

    std::vector<MomentEstimate> out;
    out.reserve(steps.size());
    for (const auto& s : samples) out.push_back(estimate(s));
    return out;
}

RefinementPair simulate_refinement_pair(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec,
                                        const std::optional<GaussianStated>& initial) {
    spec.validate();
    sys.check_dimensions();
    const auto n = sys.dim();
    const Propagator coarse = make_propagator(sys, spec.dt, spec.scheme);
    const Propagator fine = make_propagator(sys, 0.5 * spec.dt, spec.scheme);
    const Start start = make_start(sys, initial);
    const DivergenceGuard guard(sys, start, spec.t_final);
    const std::size_t n_steps = step_count(spec.t_final, spec.dt);
    const std::size_t first_sample = step_count(spec.burn_in, spec.dt);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    std::vector<Moments> coarse_acc(spec.n_trajectories, Moments(n)), fine_acc(spec.n_trajectories, Moments(n));
    for_each_trajectory(spec.n_trajectories, spec.jobs, [&](std::size_t t) {
        const Philox4x32 rng(trajectory_key(spec.seed, t));
        Eigen::VectorXd z1(n), z2(n), uc(n), uf(n), tmp(n);
        draw_normals(rng, 0, 0, z1);
        uc = start.mean + start.factor * z1;
        uf = uc;
        Moments ca(n), fa(n);
        for (std::size_t k = 0; k <= n_steps; ++k) {
            if (k > 0) {
                draw_normals(rng, 2 * k - 1, 0, z1);
                draw_normals(rng, 2 * k, 0, z2);
                tmp.noalias() = fine.transition * uf + fine.noise_factor * z1;
                uf.noalias() = fine.transition * tmp + fine.noise_factor * z2;
                tmp.noalias() = coarse.transition * uc + coarse.noise_factor * ((z1 + z2) * inv_sqrt2);
                uc.swap(tmp);
                guard.check(uc, t, static_cast<double>(k) * spec.dt);
                guard.check(uf, t, static_cast<double>(k) * spec.dt);
            }
            if (k >= first_sample && (k - first_sample) % spec.sample_stride == 0) {
                ca.add(uc);
                fa.add(uf);
            }
        }
        coarse_acc[t] = std::move(ca);
        fine_acc[t] = std::move(fa);
    });
    return {estimate(coarse_acc), estimate(fine_acc)};
}

}  // namespace cqeo
