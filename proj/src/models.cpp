#include "qer/models.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qer {

std::string model_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::TfiPlus: return "tfi+";
    case ModelKind::TfiMinus: return "tfi-";
    case ModelKind::Xx: return "xx";
    case ModelKind::NiTfiPlus: return "ni-tfi+";
    }
    throw ValidationError("unknown model kind");
}

ModelKind model_from_name(const std::string& name) {
    if (name == "tfi+") return ModelKind::TfiPlus;
    if (name == "tfi-") return ModelKind::TfiMinus;
    if (name == "xx") return ModelKind::Xx;
    if (name == "ni-tfi+") return ModelKind::NiTfiPlus;
    throw ValidationError("unknown model name: " + name);
}

ModelSpec model_spec(ModelKind kind, int sites, double field) {
    ModelSpec spec;
    spec.kind = kind;
    spec.sites = sites;
    spec.field = field;
    spec.zz_coupling = (kind == ModelKind::NiTfiPlus) ? 0.2 : 0.0;
    validate(spec);
    return spec;
}

void validate(const ModelSpec& spec) {
    if (spec.sites < 2) {
        throw ValidationError("model requires at least 2 sites");
    }
    if (spec.kind != ModelKind::NiTfiPlus && spec.zz_coupling != 0.0) {
        throw ValidationError("zz coupling is only part of the non-integrable chain");
    }
}

std::vector<std::pair<int, int>> chain_bonds(int sites) {
    std::vector<std::pair<int, int>> bonds;
    for (int i = 1; i < sites; ++i) {
        bonds.emplace_back(i, i + 1);
    }
    if (sites >= 3) {
        bonds.emplace_back(sites, 1);
    }
    return bonds;
}

SparseHamiltonian sparse_hamiltonian(const ModelSpec& spec) {
    validate(spec);
    const int sites = spec.sites;
    const Eigen::Index dim = Eigen::Index{1} << sites;
    const bool xx = spec.kind == ModelKind::Xx;
    const double xx_sign = (spec.kind == ModelKind::TfiMinus) ? +1.0 : -1.0;

    SparseHamiltonian h;
    h.sites = sites;
    h.diag = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        double d = 0.0;
        for (int i = 1; i <= sites; ++i) {
            const double s = spin_sign(static_cast<std::uint64_t>(j), sites, i);
            const double stagger = xx ? ((i % 2 == 0) ? +1.0 : -1.0) : +1.0;
            d += -spec.field * stagger * s;
        }
        if (spec.zz_coupling != 0.0) {
            for (const auto& [a, b] : chain_bonds(sites)) {
                d += spec.zz_coupling *
                     spin_sign(static_cast<std::uint64_t>(j), sites, a) *
                     spin_sign(static_cast<std::uint64_t>(j), sites, b);
            }
        }
        h.diag[j] = d;
    }

    for (const auto& [a, b] : chain_bonds(sites)) {
        SparseHamiltonian::HopTerm hop;
        hop.mask = site_mask(sites, a) | site_mask(sites, b);
        hop.amp = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (xx) {
                const bool anti = spin_sign(static_cast<std::uint64_t>(j), sites, a) !=
                                  spin_sign(static_cast<std::uint64_t>(j), sites, b);
                hop.amp[j] = anti ? -2.0 : 0.0;
            } else {
                hop.amp[j] = xx_sign;
            }
        }
        h.hops.push_back(std::move(hop));
    }
    return h;
}

Eigen::MatrixXcd build_hamiltonian(const ModelSpec& spec) {
    const SparseHamiltonian h = sparse_hamiltonian(spec);
    const Eigen::Index dim = h.diag.size();
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
    mat.diagonal() = h.diag.cast<Complex>();
    for (const auto& hop : h.hops) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            mat(j, static_cast<Eigen::Index>(static_cast<std::uint64_t>(j) ^ hop.mask)) +=
                hop.amp[j];
        }
    }
    return mat;
}

PureState Spectrum::eigenstate(Eigen::Index k) const {
    PureState psi;
    psi.sites = sites;
    psi.amps = states.col(k);
    return psi;
}

Spectrum diagonalize(const Eigen::MatrixXcd& hamiltonian, int sites) {
    const double herm = (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10) {
        throw ValidationError("diagonalize: input not Hermitian (max dev " +
                              std::to_string(herm) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hamiltonian);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigensolver failed to converge");
    }
    Spectrum sp;
    sp.sites = sites;
    sp.energies = solver.eigenvalues();
    sp.states = solver.eigenvectors();
    // phase convention: largest-magnitude amplitude real positive
    for (Eigen::Index k = 0; k < sp.states.cols(); ++k) {
        Eigen::Index imax = 0;
        double amax = -1.0;
        for (Eigen::Index j = 0; j < sp.states.rows(); ++j) {
            const double a = std::abs(sp.states(j, k));
            if (a > amax) {
                amax = a;
                imax = j;
            }
        }
        const Complex z = sp.states(imax, k);
        sp.states.col(k) *= std::conj(z) / std::abs(z);
    }
    return sp;
}

Spectrum diagonalize(const ModelSpec& spec) {
    return diagonalize(build_hamiltonian(spec), spec.sites);
}

PureState ground_state(const ModelSpec& spec) {
    return diagonalize(spec).eigenstate(0);
}

PureState evolve_unitary(const PureState& initial, const Spectrum& spectrum, double t) {
    if (initial.dim() != spectrum.states.rows()) {
        throw ValidationError("evolve_unitary: state/spectrum dimension mismatch");
    }
    Eigen::VectorXcd coeff = spectrum.states.adjoint() * initial.amps;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
        coeff[k] *= std::polar(1.0, -spectrum.energies[k] * t);
    }
    PureState out;
    out.sites = initial.sites;
    out.amps = spectrum.states * coeff;
    return out;
}

double lindblad_default_dt(double gamma) {
    return 0.01 / std::max(1.0, 10.0 * gamma);
}

// ---------------------------------------------------------------------------
// Lindblad RK4 propagator.
//
// The density matrix is held as separate real and imaginary planes so the
// inner sweeps are plain real AXPY loops over contiguous columns. All chain
// Hamiltonians here are real, which makes H*rho two independent real sweeps.
// ---------------------------------------------------------------------------

namespace {

struct Planes {
    Eigen::MatrixXd re, im;
    void resize(Eigen::Index d) {
        re.resize(d, d);
        im.resize(d, d);
    }
};

// out = H*in for one column pair, using the bit-indexed hop structure.
void sparse_mult_column(const SparseHamiltonian& h, const double* in_re, const double* in_im,
                        double* out_re, double* out_im) {
    const Eigen::Index d = h.diag.size();
    const double* dg = h.diag.data();
    for (Eigen::Index j = 0; j < d; ++j) {
        out_re[j] = dg[j] * in_re[j];
        out_im[j] = dg[j] * in_im[j];
    }
    for (const auto& hop : h.hops) {
        const std::uint64_t m = hop.mask;
        const double* amp = hop.amp.data();
        for (Eigen::Index j = 0; j < d; ++j) {
            const Eigen::Index p = static_cast<Eigen::Index>(static_cast<std::uint64_t>(j) ^ m);
            out_re[j] += amp[j] * in_re[p];
            out_im[j] += amp[j] * in_im[p];
        }
    }
}

class LindbladPropagator {
  public:
    LindbladPropagator(const ModelSpec& spec, const LindbladConfig& cfg)
        : cfg_(cfg), sites_(spec.sites), dim_(Eigen::Index{1} << spec.sites) {
        if (cfg_.dt <= 0.0) {
            throw ValidationError("lindblad step size must be positive");
        }
        if (cfg_.gamma < 0.0) {
            throw ValidationError("dissipation rate must be nonnegative");
        }
        if (cfg_.include_hamiltonian) {
            hamiltonian_ = sparse_hamiltonian(spec);
        }
        for (int i = 1; i <= sites_; ++i) {
            site_masks_.push_back(site_mask(sites_, i));
        }
        a_.resize(dim_);
        k_.resize(dim_);
        sum_.resize(dim_);
        tmp_.resize(dim_);
    }

    void advance(Planes& rho, double t_total) {
        if (t_total < 0.0) {
            throw ValidationError("cannot evolve to negative time");
        }
        const long full_steps = static_cast<long>(std::floor(t_total / cfg_.dt + 1e-12));
        const double remainder = t_total - static_cast<double>(full_steps) * cfg_.dt;
        for (long s = 0; s < full_steps; ++s) {
            step(rho, cfg_.dt);
        }
        if (remainder > 1e-12) {
            step(rho, remainder);
        }
    }

  private:
    void generator(const Planes& in, Planes& out) {
        const Eigen::Index d = dim_;
        const bool with_h = cfg_.include_hamiltonian;
        if (with_h) {
            const SparseHamiltonian& h = hamiltonian_;
#pragma omp parallel for schedule(static)
            for (Eigen::Index k = 0; k < d; ++k) {
                sparse_mult_column(h, in.re.data() + k * d, in.im.data() + k * d,
                                   a_.re.data() + k * d, a_.im.data() + k * d);
            }
        }
        const double gamma = cfg_.gamma;
        const double leak = gamma * static_cast<double>(sites_);
#pragma omp parallel for schedule(static)
        for (Eigen::Index k = 0; k < d; ++k) {
            double* ore = out.re.data() + k * d;
            double* oim = out.im.data() + k * d;
            if (with_h) {
                // -i (A - A^dag): re = A_im[j,k] + A_im[k,j], im = A_re[k,j] - A_re[j,k]
                const double* are_col = a_.re.data() + k * d;
                const double* aim_col = a_.im.data() + k * d;
                for (Eigen::Index j = 0; j < d; ++j) {
                    ore[j] = aim_col[j] + a_.im(k, j);
                    oim[j] = a_.re(k, j) - are_col[j];
                }
            } else {
                for (Eigen::Index j = 0; j < d; ++j) {
                    ore[j] = 0.0;
                    oim[j] = 0.0;
                }
            }
            if (gamma > 0.0) {
                for (const std::uint64_t m : site_masks_) {
                    const Eigen::Index kc = static_cast<Eigen::Index>(
                        static_cast<std::uint64_t>(k) ^ m);
                    const double* src_re = in.re.data() + kc * d;
                    const double* src_im = in.im.data() + kc * d;
                    for (Eigen::Index j = 0; j < d; ++j) {
                        const Eigen::Index p =
                            static_cast<Eigen::Index>(static_cast<std::uint64_t>(j) ^ m);
                        ore[j] += gamma * src_re[p];
                        oim[j] += gamma * src_im[p];
                    }
                }
                const double* ire = in.re.data() + k * d;
                const double* iim = in.im.data() + k * d;
                for (Eigen::Index j = 0; j < d; ++j) {
                    ore[j] -= leak * ire[j];
                    oim[j] -= leak * iim[j];
                }
            }
        }
    }

    void step(Planes& rho, double dt) {
        generator(rho, k_);
        sum_.re = k_.re;
        sum_.im = k_.im;
        tmp_.re = rho.re + (0.5 * dt) * k_.re;
        tmp_.im = rho.im + (0.5 * dt) * k_.im;

        generator(tmp_, k_);
        sum_.re += 2.0 * k_.re;
        sum_.im += 2.0 * k_.im;
        tmp_.re = rho.re + (0.5 * dt) * k_.re;
        tmp_.im = rho.im + (0.5 * dt) * k_.im;

        generator(tmp_, k_);
        sum_.re += 2.0 * k_.re;
        sum_.im += 2.0 * k_.im;
        tmp_.re = rho.re + dt * k_.re;
        tmp_.im = rho.im + dt * k_.im;

        generator(tmp_, k_);
        sum_.re += k_.re;
        sum_.im += k_.im;

        rho.re += (dt / 6.0) * sum_.re;
        rho.im += (dt / 6.0) * sum_.im;

        // enforce Hermiticity, then check the trace
        for (Eigen::Index k = 0; k < dim_; ++k) {
            for (Eigen::Index j = 0; j < k; ++j) {
                const double r = 0.5 * (rho.re(j, k) + rho.re(k, j));
                rho.re(j, k) = r;
                rho.re(k, j) = r;
                const double i = 0.5 * (rho.im(j, k) - rho.im(k, j));
                rho.im(j, k) = i;
                rho.im(k, j) = -i;
            }
            rho.im(k, k) = 0.0;
        }
        const double trace = rho.re.diagonal().sum();
        if (!(std::abs(trace - 1.0) <= 1e-6)) {
            throw NumericalError("lindblad trace drifted to " + std::to_string(trace) +
                                 "; step size too large");
        }
    }

    LindbladConfig cfg_;
    int sites_;
    Eigen::Index dim_;
    SparseHamiltonian hamiltonian_;
    std::vector<std::uint64_t> site_masks_;
    Planes a_, k_, sum_, tmp_;
};

Planes to_planes(const DensityMatrix& rho) {
    Planes p;
    p.re = rho.mat.real();
    p.im = rho.mat.imag();
    return p;
}

DensityMatrix from_planes(const Planes& p, int sites) {
    DensityMatrix rho;
    rho.sites = sites;
    rho.mat = p.re.cast<Complex>() + Complex(0, 1) * p.im.cast<Complex>();
    return rho;
}

} // namespace

DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const ModelSpec& spec,
                              const LindbladConfig& cfg, double t) {
    std::vector<DensityMatrix> out = evolve_lindblad_path(rho0, spec, cfg, {t});
    return std::move(out.front());
}

std::vector<DensityMatrix> evolve_lindblad_path(const DensityMatrix& rho0,
                                                const ModelSpec& spec,
                                                const LindbladConfig& cfg,
                                                const std::vector<double>& times) {
    if (rho0.dim() != (Eigen::Index{1} << spec.sites)) {
        throw ValidationError("evolve_lindblad: state/model dimension mismatch");
    }
    if (!std::is_sorted(times.begin(), times.end())) {
        throw ValidationError("evolve_lindblad: checkpoint times must be ascending");
    }
    if (!times.empty() && times.front() < 0.0) {
        throw ValidationError("evolve_lindblad: negative time");
    }
    LindbladConfig effective = cfg;
    if (effective.dt <= 0.0) {
        effective.dt = lindblad_default_dt(cfg.gamma);
    }
    LindbladPropagator prop(spec, effective);
    Planes rho = to_planes(rho0);
    std::vector<DensityMatrix> snapshots;
    snapshots.reserve(times.size());
    double now = 0.0;
    for (const double t : times) {
        prop.advance(rho, t - now);
        now = t;
        snapshots.push_back(from_planes(rho, spec.sites));
    }
    return snapshots;
}

} // namespace qer
