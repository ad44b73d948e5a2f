//! Configurational fluxes and balance laws: the Eshelby stress, the
//! angular-momentum flux with its orbital/spin split, the scaling
//! flux, the general symmetry flux they all specialize, and the
//! source terms whose volume integrals balance the surface fluxes.
//!
//! Sign and index conventions (derivative index of every flux is the
//! SECOND/LAST slot, the one contracted with the outward normal):
//!   P_ki  = W d_ki - u_{a,k} t_ai - phi_{ab,k} m_abi
//!   M_ki  = eps_kjn (x_j P_ni + u_j t_ni + phi_lj m_lni + phi_jl m_nli)
//!   Y_i   = x_j P_ji + d_u u_j t_ji + d_phi phi_jl m_jli
//! Balance laws:
//!   D_i P_ki = -f^inh_k
//!   D_i M_ki = rotational source (anisotropy bracket + moment terms)
//!   D_i Y_i  = scaling source (-kappa:m - x.f^inh - weighted source work)

use alloc::boxed::Box;

use crate::fields::{
    fd_divergence, total_derivative, FieldSample, FieldSet, JetBundle, SamplePartials,
};
use crate::kinetics::{
    energy_conjugates, energy_density, strain_gradients, strains, stress_divergences,
    stresses, EnergyConvention, KineticsError, StrainGradients, StrainState, StressState,
};
use crate::material::{MaterialGradients, MaterialModel, MaterialPoint};
use crate::tensor::{contract, Tensor};

/// Scaling dimensions of the two fields in n spatial dimensions:
/// d_u = -(n-2)/2, d_phi = -n/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingDims {
    pub d_u: f64,
    pub d_phi: f64,
    pub n: u32,
}

impl ScalingDims {
    pub fn for_dimension(n: u32) -> Self {
        let nf = n as f64;
        Self {
            d_u: -(nf - 2.0) / 2.0,
            d_phi: -nf / 2.0,
            n,
        }
    }
}

impl Default for ScalingDims {
    fn default() -> Self {
        Self::for_dimension(3)
    }
}

/// Infinitesimal symmetry generator: shifts of position, displacement,
/// and micro-distortion as functions of the local field sample.
pub struct GeneratorTriple {
    pub x_shift: Box<dyn Fn(&FieldSample) -> Tensor + Send + Sync>,
    pub u_shift: Box<dyn Fn(&FieldSample) -> Tensor + Send + Sync>,
    pub phi_shift: Box<dyn Fn(&FieldSample) -> Tensor + Send + Sync>,
}

impl GeneratorTriple {
    /// Translation along axis k: X_i = d_ki, U = 0, Phi = 0.
    pub fn translation(k: usize) -> Self {
        assert!(k < 3);
        Self {
            x_shift: Box::new(move |_| {
                Tensor::from_fn(1, |idx| if idx[0] == k { 1.0 } else { 0.0 })
            }),
            u_shift: Box::new(|_| Tensor::zeros(1)),
            phi_shift: Box::new(|_| Tensor::zeros(2)),
        }
    }

    /// Rotation about axis k:
    /// X_i = eps_ikj x_j, U_a = eps_akb u_b,
    /// Phi_ab = eps_akj phi_jb + eps_bkj phi_aj.
    pub fn rotation(k: usize) -> Self {
        assert!(k < 3);
        let eps = Tensor::levi_civita();
        let eps_x = eps.clone();
        let eps_u = eps.clone();
        Self {
            x_shift: Box::new(move |s: &FieldSample| {
                Tensor::from_fn(1, |idx| {
                    let i = idx[0];
                    (0..3).map(|j| eps_x.get(&[i, k, j]) * s.x[j]).sum()
                })
            }),
            u_shift: Box::new(move |s: &FieldSample| {
                Tensor::from_fn(1, |idx| {
                    let a = idx[0];
                    (0..3)
                        .map(|b| eps_u.get(&[a, k, b]) * s.u.value.get(&[b]))
                        .sum()
                })
            }),
            phi_shift: Box::new(move |s: &FieldSample| {
                Tensor::from_fn(2, |idx| {
                    let (a, b) = (idx[0], idx[1]);
                    (0..3)
                        .map(|j| {
                            eps.get(&[a, k, j]) * s.phi.value.get(&[j, b])
                                + eps.get(&[b, k, j]) * s.phi.value.get(&[a, j])
                        })
                        .sum()
                })
            }),
        }
    }

    /// Scaling: X = x, U = d_u u, Phi = d_phi phi.
    pub fn scaling(dims: ScalingDims) -> Self {
        Self {
            x_shift: Box::new(|s: &FieldSample| Tensor::vector(s.x)),
            u_shift: Box::new(move |s: &FieldSample| s.u.value.scale(dims.d_u)),
            phi_shift: Box::new(move |s: &FieldSample| s.phi.value.scale(dims.d_phi)),
        }
    }
}

/// All configurational fluxes at one point.
#[derive(Clone, Debug)]
pub struct CurrentState {
    pub p: Tensor,
    pub m_total: Tensor,
    pub m_orbital: Tensor,
    pub m_spin: Tensor,
    pub y: Tensor,
}

/// Rotational balance source, split so the anisotropy bracket can be
/// inspected on its own: it vanishes pointwise for isotropic materials.
#[derive(Clone, Debug)]
pub struct RotationalSource {
    pub bracket: Tensor,
    pub moments: Tensor,
}

impl RotationalSource {
    pub fn total(&self) -> Tensor {
        self.bracket.sub(&self.moments)
    }
}

/// Residuals of the three balance laws at a point; all vanish on
/// solutions of the field equations. `el_residual` records how well
/// the field equations themselves hold; `off_shell` flags configs
/// where the balance laws are not expected to close.
#[derive(Clone, Debug)]
pub struct BalanceResiduals {
    pub translational: Tensor,
    pub rotational: Tensor,
    pub scaling: f64,
    pub el_residual: f64,
    pub off_shell: bool,
}

/// Field-equation tolerance above which balance residuals carry the
/// off-shell warning.
pub const ON_SHELL_TOL: f64 = 1e-8;

/// Everything the fluxes and sources need at one point, computed once.
pub struct PointEvaluation {
    pub bundle: JetBundle,
    pub sample: FieldSample,
    pub material_point: MaterialPoint,
    pub material_gradients: MaterialGradients,
    pub strains: StrainState,
    pub strain_gradients: StrainGradients,
    pub stresses: StressState,
    /// Energy-gradient conjugates (tau, mu): the independent stress path.
    pub tau: Tensor,
    pub mu: Tensor,
    pub energy: f64,
    pub div_t: Tensor,
    pub div_m: Tensor,
    pub convention: EnergyConvention,
}

impl PointEvaluation {
    pub fn new(
        fields: &FieldSet,
        material: &MaterialModel,
        x: [f64; 3],
        convention: EnergyConvention,
    ) -> Result<Self, KineticsError> {
        let bundle = fields.evaluate_jet(x)?;
        let sample = FieldSample::from_bundle(&bundle);
        let st = strains(&sample);
        let sg = strain_gradients(&sample);
        let material_point = material.at(x);
        let material_gradients = material.gradients_at(x);
        let ss = stresses(&material_point, &st)?;
        let (tau, mu) = energy_conjugates(&material_point, &st);
        let energy = energy_density(&st, &ss, &bundle, convention);
        let (div_t, div_m) = stress_divergences(&material_point, &material_gradients, &st, &sg);
        Ok(Self {
            bundle,
            sample,
            material_point,
            material_gradients,
            strains: st,
            strain_gradients: sg,
            stresses: ss,
            tau,
            mu,
            energy,
            div_t,
            div_m,
            convention,
        })
    }

    fn x_vec(&self) -> Tensor {
        Tensor::vector(self.bundle.x)
    }

    /// Eshelby stress P_ki = W d_ki - u_{a,k} t_ai - phi_{ab,k} m_abi.
    pub fn eshelby_stress(&self) -> Tensor {
        self.eshelby_with(&self.stresses.t, &self.stresses.m)
    }

    /// Same flux through the energy-gradient conjugates tau, mu.
    pub fn eshelby_stress_via_conjugates(&self) -> Tensor {
        self.eshelby_with(&self.tau, &self.mu)
    }

    fn eshelby_with(&self, t: &Tensor, m: &Tensor) -> Tensor {
        let mut p = Tensor::delta().scale(self.energy);
        let ut = contract(&self.sample.u.gradient, t, &[(0, 0)]).expect("rank 2 vs 2");
        let pm = contract(&self.sample.phi.gradient, m, &[(0, 0), (1, 1)]).expect("rank 3 vs 3");
        p = p.sub(&ut).sub(&pm);
        p
    }

    /// Total, orbital, and spin angular-momentum fluxes:
    /// M_ki = eps_kjn (x_j P_ni + u_j t_ni + phi_lj m_lni + phi_jl m_nli),
    /// orbital part eps_kjn x_j P_ni, spin part the rest.
    pub fn angular_momentum(&self) -> (Tensor, Tensor, Tensor) {
        let eps = Tensor::levi_civita();
        let p = self.eshelby_stress();
        let t = &self.stresses.t;
        let m = &self.stresses.m;
        let u = &self.sample.u.value;
        let phi = &self.sample.phi.value;
        // all pieces assembled as rank-3 [j, n, i] then hit with eps_kjn
        let orb_inner = contract(&self.x_vec(), &p, &[]).expect("outer product");
        let mut spin_inner = contract(u, t, &[]).expect("outer product");
        spin_inner = spin_inner.add(&contract(phi, m, &[(0, 0)]).expect("rank 2 vs 3"));
        spin_inner = spin_inner.add(&contract(phi, m, &[(1, 1)]).expect("rank 2 vs 3"));
        let pair = [(1usize, 0usize), (2, 1)];
        let orbital = contract(&eps, &orb_inner, &pair).expect("eps contraction");
        let spin = contract(&eps, &spin_inner, &pair).expect("eps contraction");
        (orbital.add(&spin), orbital, spin)
    }

    /// Angular-momentum flux assembled directly from the generator
    /// expansion, using the conjugates: the independent dual path.
    ///   M_ki = eps_kji x_j W
    ///        + eps_kja (u_j tau_ai + phi_jl mu_ali + phi_lj mu_lai)
    ///        - eps_kjn x_j (u_{a,n} tau_ai + phi_{ab,n} mu_abi)
    pub fn angular_momentum_via_conjugates(&self) -> Tensor {
        let eps = Tensor::levi_civita();
        let u = &self.sample.u.value;
        let phi = &self.sample.phi.value;
        let xw = contract(&eps, &self.x_vec(), &[(1, 0)])
            .expect("eps contraction")
            .scale(self.energy);
        let mut gen_inner = contract(u, &self.tau, &[]).expect("outer product");
        gen_inner = gen_inner.add(&contract(phi, &self.mu, &[(1, 1)]).expect("rank 2 vs 3"));
        gen_inner = gen_inner.add(&contract(phi, &self.mu, &[(0, 0)]).expect("rank 2 vs 3"));
        let gen = contract(&eps, &gen_inner, &[(1, 0), (2, 1)]).expect("eps contraction");
        let mut deficit = contract(&self.sample.u.gradient, &self.tau, &[(0, 0)])
            .expect("rank 2 vs 2");
        deficit = deficit.add(
            &contract(&self.sample.phi.gradient, &self.mu, &[(0, 0), (1, 1)])
                .expect("rank 3 vs 3"),
        );
        let x_deficit = contract(&self.x_vec(), &deficit, &[]).expect("outer product");
        let transport = contract(&eps, &x_deficit, &[(1, 0), (2, 1)]).expect("eps contraction");
        xw.add(&gen).sub(&transport)
    }

    /// Scaling flux Y_i = x_j P_ji + d_u u_j t_ji + d_phi phi_jl m_jli.
    pub fn scaling_flux(&self, dims: ScalingDims) -> Tensor {
        let p = self.eshelby_stress();
        let mut y = contract(&self.x_vec(), &p, &[(0, 0)]).expect("rank 1 vs 2");
        y = y.add(
            &contract(&self.sample.u.value, &self.stresses.t, &[(0, 0)])
                .expect("rank 1 vs 2")
                .scale(dims.d_u),
        );
        y.add(
            &contract(&self.sample.phi.value, &self.stresses.m, &[(0, 0), (1, 1)])
                .expect("rank 2 vs 3")
                .scale(dims.d_phi),
        )
    }

    /// Scaling flux from the generator expansion with conjugates:
    /// Y_i = x_i W + (d_u u_a - x_k u_{a,k}) tau_ai
    ///     + (d_phi phi_ab - x_k phi_{ab,k}) mu_abi.
    pub fn scaling_flux_via_conjugates(&self, dims: ScalingDims) -> Tensor {
        let xw = self.x_vec().scale(self.energy);
        let u_adv = contract(&self.sample.u.gradient, &self.x_vec(), &[(1, 0)])
            .expect("rank 2 vs 1");
        let u_gen = self.sample.u.value.scale(dims.d_u).sub(&u_adv);
        let phi_adv = contract(&self.sample.phi.gradient, &self.x_vec(), &[(2, 0)])
            .expect("rank 3 vs 1");
        let phi_gen = self.sample.phi.value.scale(dims.d_phi).sub(&phi_adv);
        xw.add(&contract(&u_gen, &self.tau, &[(0, 0)]).expect("rank 1 vs 2"))
            .add(&contract(&phi_gen, &self.mu, &[(0, 0), (1, 1)]).expect("rank 2 vs 3"))
    }

    /// The flux of an arbitrary generator (X, U, Phi):
    /// A_i = U_a t_ai + Phi_ab m_abi + X_i W
    ///     - X_j (u_{a,j} t_ai + phi_{ab,j} m_abi).
    pub fn general_flux(&self, gen: &GeneratorTriple) -> Tensor {
        let xv = (gen.x_shift)(&self.sample);
        let uv = (gen.u_shift)(&self.sample);
        let pv = (gen.phi_shift)(&self.sample);
        let mut a = contract(&uv, &self.stresses.t, &[(0, 0)]).expect("rank 1 vs 2");
        a = a.add(
            &contract(&pv, &self.stresses.m, &[(0, 0), (1, 1)]).expect("rank 2 vs 3"),
        );
        a = a.add(&xv.scale(self.energy));
        let mut deficit = contract(&self.sample.u.gradient, &self.stresses.t, &[(0, 0)])
            .expect("rank 2 vs 2");
        deficit = deficit.add(
            &contract(&self.sample.phi.gradient, &self.stresses.m, &[(0, 0), (1, 1)])
                .expect("rank 3 vs 3"),
        );
        a.sub(&contract(&xv, &deficit, &[(0, 0)]).expect("rank 1 vs 2"))
    }

    /// Inhomogeneity force f^inh_k = -dW/dx_k at frozen field
    /// arguments: material-gradient quadratic terms plus (under the
    /// full energy convention) explicit source gradients.
    pub fn inhomogeneity_force(&self) -> Tensor {
        let st = &self.strains;
        let mg = &self.material_gradients;
        let two = [(0usize, 0usize), (1, 1)];
        let three = [(0usize, 0usize), (1, 1), (2, 2)];
        let c = |a: &Tensor, b: &Tensor, p: &[(usize, usize)]| {
            contract(a, b, p).expect("gradient contraction")
        };
        let mut grad_w = c(&c(&mg.a, &st.gamma, &two), &st.gamma, &two).scale(0.5);
        grad_w = grad_w.add(&c(&c(&mg.e, &st.gamma, &two), &st.e, &two));
        grad_w = grad_w.add(&c(&c(&mg.b, &st.e, &two), &st.e, &two).scale(0.5));
        grad_w = grad_w.add(&c(&c(&mg.f, &st.gamma, &two), &st.kappa, &three));
        grad_w = grad_w.add(&c(&c(&mg.g, &st.e, &two), &st.kappa, &three));
        grad_w = grad_w.add(&c(&c(&mg.c, &st.kappa, &three), &st.kappa, &three).scale(0.5));
        let mut f = grad_w.scale(-1.0);
        if self.convention == EnergyConvention::Full {
            f = f.add(
                &contract(&self.bundle.body_force.gradient, &self.sample.u.value, &[(0, 0)])
                    .expect("rank 2 vs 1"),
            );
            f = f.add(
                &contract(
                    &self.bundle.body_couple.gradient,
                    &self.sample.phi.value,
                    &[(0, 0), (1, 1)],
                )
                .expect("rank 3 vs 2"),
            );
        }
        f
    }

    /// Source of the rotational balance law, with the anisotropy
    /// bracket kept separate from the moment terms:
    /// bracket_k = eps_kjn (gamma_ij t_in + gamma_ji t_ni + 2 e_ij s_in
    ///           + kappa_ijl m_inl + kappa_jli m_nli + kappa_lij m_lin)
    /// moments_k = eps_kjn (x_j f^inh_n + u_j F_n
    ///           + phi_ji L_ni + phi_ij L_in)
    pub fn rotational_source(&self) -> RotationalSource {
        let eps = Tensor::levi_civita();
        let st = &self.strains;
        let ss = &self.stresses;
        let phi = &self.sample.phi.value;
        let c = |a: &Tensor, b: &Tensor, p: &[(usize, usize)]| {
            contract(a, b, p).expect("source contraction")
        };
        // each term lands on rank-2 [j, n]
        let mut inner = c(&st.gamma, &ss.t, &[(0, 0)]);
        inner = inner.add(&c(&st.gamma, &ss.t, &[(1, 1)]));
        inner = inner.add(&c(&st.e, &ss.s, &[(0, 0)]).scale(2.0));
        inner = inner.add(&c(&st.kappa, &ss.m, &[(0, 0), (2, 2)]));
        inner = inner.add(&c(&st.kappa, &ss.m, &[(1, 1), (2, 2)]));
        inner = inner.add(&c(&st.kappa, &ss.m, &[(0, 0), (1, 1)]));
        let pair = [(1usize, 0usize), (2, 1)];
        let bracket = c(&eps, &inner, &pair);
        let f_inh = self.inhomogeneity_force();
        let bf = &self.bundle.body_force.value;
        let bc = &self.bundle.body_couple.value;
        let mut m_inner = c(&self.x_vec(), &f_inh, &[]);
        m_inner = m_inner.add(&c(&self.sample.u.value, bf, &[]));
        m_inner = m_inner.add(&c(phi, bc, &[(1, 1)]));
        m_inner = m_inner.add(&c(phi, bc, &[(0, 0)]));
        let moments = c(&eps, &m_inner, &pair);
        RotationalSource { bracket, moments }
    }

    /// Source of the scaling balance law:
    /// -kappa:m - x.f^inh - (n+2)/2 u.F - n/2 phi:L.
    pub fn scaling_source(&self, dims: ScalingDims) -> f64 {
        let nf = dims.n as f64;
        let f_inh = self.inhomogeneity_force();
        -self.strains.kappa.inner(&self.stresses.m)
            - self.x_vec().inner(&f_inh)
            - 0.5 * (nf + 2.0) * self.sample.u.value.inner(&self.bundle.body_force.value)
            - 0.5 * nf * self.sample.phi.value.inner(&self.bundle.body_couple.value)
    }

    /// Exact total gradient D_k W via the chain rule through the jets:
    /// D_k W = -f^inh_k - F_a u_{a,k} + (s - t - L)_ab phi_{ab,k}
    ///       + t_ai u_{a,ik} + m_abi phi_{ab,ik}
    /// (the conjugate pairs tau = t, mu = m hold on the symmetry class,
    /// and the constitutive stresses keep this assembly consistent with
    /// the flux definitions).
    pub fn energy_gradient(&self) -> Tensor {
        let wrt_phi = self
            .stresses
            .s
            .sub(&self.stresses.t)
            .sub(&self.bundle.body_couple.value);
        let wrt_u = self.bundle.body_force.value.scale(-1.0);
        let (wrt_u, wrt_phi) = match self.convention {
            EnergyConvention::Full => (wrt_u, wrt_phi),
            // without source terms W has no direct u- or phi-dependence
            // beyond the strains; the phi partial keeps only s - t
            EnergyConvention::WithoutSources => (
                Tensor::zeros(1),
                self.stresses.s.sub(&self.stresses.t),
            ),
        };
        let partials = SamplePartials {
            rank: 0,
            wrt_x: self.inhomogeneity_force().scale(-1.0),
            wrt_u,
            wrt_phi,
            wrt_grad_u: self.stresses.t.clone(),
            wrt_grad_phi: self.stresses.m.clone(),
        };
        total_derivative(&partials, &self.sample)
    }

    /// Exact divergence D_i P_ki, assembled with the product rule from
    /// the energy gradient and the stress divergences.
    pub fn eshelby_divergence(&self) -> Tensor {
        let mut div = self.energy_gradient();
        // u_{a,ki} t_ai: hessian slots [a, k, i]
        div = div.sub(
            &contract(&self.sample.u.hessian, &self.stresses.t, &[(0, 0), (2, 1)])
                .expect("rank 3 vs 2"),
        );
        div = div.sub(
            &contract(&self.sample.u.gradient, &self.div_t, &[(0, 0)]).expect("rank 2 vs 1"),
        );
        div = div.sub(
            &contract(
                &self.sample.phi.hessian,
                &self.stresses.m,
                &[(0, 0), (1, 1), (3, 2)],
            )
            .expect("rank 4 vs 3"),
        );
        div.sub(
            &contract(&self.sample.phi.gradient, &self.div_m, &[(0, 0), (1, 1)])
                .expect("rank 3 vs 2"),
        )
    }

    /// Exact divergence D_i M_ki of the total angular-momentum flux.
    pub fn angular_momentum_divergence(&self) -> Tensor {
        let eps = Tensor::levi_civita();
        let p = self.eshelby_stress();
        let div_p = self.eshelby_divergence();
        let u = &self.sample.u.value;
        let phi = &self.sample.phi.value;
        let c = |a: &Tensor, b: &Tensor, pr: &[(usize, usize)]| {
            contract(a, b, pr).expect("divergence contraction")
        };
        // rank-2 accumulator over [j, n]
        let mut inner = p.permute_slots(&[1, 0]);
        inner = inner.add(&c(&self.x_vec(), &div_p, &[]));
        inner = inner.add(&c(&self.sample.u.gradient, &self.stresses.t, &[(1, 1)]));
        inner = inner.add(&c(u, &self.div_t, &[]));
        inner = inner.add(&c(&self.sample.phi.gradient, &self.stresses.m, &[(0, 0), (2, 2)]));
        inner = inner.add(&c(phi, &self.div_m, &[(0, 0)]));
        inner = inner.add(&c(&self.sample.phi.gradient, &self.stresses.m, &[(1, 1), (2, 2)]));
        inner = inner.add(&c(phi, &self.div_m, &[(1, 1)]));
        c(&eps, &inner, &[(1, 0), (2, 1)])
    }

    /// Exact divergence D_i Y_i of the scaling flux.
    pub fn scaling_divergence(&self, dims: ScalingDims) -> f64 {
        let p = self.eshelby_stress();
        let div_p = self.eshelby_divergence();
        let u = &self.sample.u.value;
        let phi = &self.sample.phi.value;
        p.trace(0, 1).as_scalar()
            + self.x_vec().inner(&div_p)
            + dims.d_u
                * (self.sample.u.gradient.inner(&self.stresses.t) + u.inner(&self.div_t))
            + dims.d_phi
                * (self.sample.phi.gradient.inner(&self.stresses.m)
                    + phi.inner(&self.div_m))
    }

    /// Field-equation residuals (force balance, micro-balance).
    pub fn euler_lagrange(&self) -> (Tensor, Tensor) {
        let force = self.div_t.add(&self.bundle.body_force.value);
        let micro = self
            .div_m
            .add(&self.stresses.t.sub(&self.stresses.s))
            .add(&self.bundle.body_couple.value);
        (force, micro)
    }

    /// All three balance-law residuals via exact divergences.
    pub fn balance_residuals(&self, dims: ScalingDims) -> BalanceResiduals {
        let (r1, r2) = self.euler_lagrange();
        let el_residual = crate::math::max(r1.max_abs(), r2.max_abs());
        let translational = self.eshelby_divergence().add(&self.inhomogeneity_force());
        let rotational = self
            .angular_momentum_divergence()
            .sub(&self.rotational_source().total());
        let scaling = self.scaling_divergence(dims) - self.scaling_source(dims);
        BalanceResiduals {
            translational,
            rotational,
            scaling,
            el_residual,
            off_shell: el_residual > ON_SHELL_TOL,
        }
    }
}

/// Bundles the fluxes at one point; orbital + spin always reassembles
/// the total.
pub fn current_state(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
    dims: ScalingDims,
) -> Result<CurrentState, KineticsError> {
    let eval = PointEvaluation::new(fields, material, x, EnergyConvention::Full)?;
    let (m_total, m_orbital, m_spin) = eval.angular_momentum();
    Ok(CurrentState {
        p: eval.eshelby_stress(),
        m_total,
        m_orbital,
        m_spin,
        y: eval.scaling_flux(dims),
    })
}

pub fn eshelby_stress(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
) -> Result<Tensor, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.eshelby_stress())
}

pub fn angular_momentum(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
) -> Result<(Tensor, Tensor, Tensor), KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.angular_momentum())
}

pub fn scaling_flux(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
    dims: ScalingDims,
) -> Result<Tensor, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.scaling_flux(dims))
}

pub fn general_flux(
    gen: &GeneratorTriple,
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
) -> Result<Tensor, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.general_flux(gen))
}

pub fn inhomogeneity_force(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
) -> Result<Tensor, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.inhomogeneity_force())
}

pub fn rotational_source(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
) -> Result<RotationalSource, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.rotational_source())
}

pub fn scaling_source(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
    dims: ScalingDims,
) -> Result<f64, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.scaling_source(dims))
}

pub fn balance_residuals(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
    dims: ScalingDims,
) -> Result<BalanceResiduals, KineticsError> {
    Ok(PointEvaluation::new(fields, material, x, EnergyConvention::Full)?.balance_residuals(dims))
}

/// Balance residuals with every divergence taken by central
/// differences of the flux fields: the independent numerical oracle
/// for the exact assembly. Points within `h` of the domain boundary
/// are the caller's responsibility.
pub fn balance_residuals_fd(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
    dims: ScalingDims,
    h: f64,
) -> Result<BalanceResiduals, KineticsError> {
    let eval = PointEvaluation::new(fields, material, x, EnergyConvention::Full)?;
    let p_field = |y: [f64; 3]| {
        PointEvaluation::new(fields, material, y, EnergyConvention::Full)
            .expect("flux field evaluation")
            .eshelby_stress()
    };
    let m_field = |y: [f64; 3]| {
        PointEvaluation::new(fields, material, y, EnergyConvention::Full)
            .expect("flux field evaluation")
            .angular_momentum()
            .0
    };
    let y_field = |y: [f64; 3]| {
        PointEvaluation::new(fields, material, y, EnergyConvention::Full)
            .expect("flux field evaluation")
            .scaling_flux(dims)
    };
    let (r1, r2) = eval.euler_lagrange();
    let el_residual = crate::math::max(r1.max_abs(), r2.max_abs());
    let translational = fd_divergence(&p_field, x, h).add(&eval.inhomogeneity_force());
    let rotational = fd_divergence(&m_field, x, h).sub(&eval.rotational_source().total());
    let scaling = fd_divergence(&y_field, x, h).as_scalar() - eval.scaling_source(dims);
    Ok(BalanceResiduals {
        translational,
        rotational,
        scaling,
        el_residual,
        off_shell: el_residual > ON_SHELL_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};
    use crate::fields::Domain;
    use crate::material::{IsotropicSpec, MaterialModel, TensorField};
    use crate::rng::SplitMix64;

    fn random_tensor(rng: &mut SplitMix64, rank: usize) -> Tensor {
        Tensor::from_fn(rank, |_| rng.range(-0.6, 0.6))
    }

    fn anisotropic_material(seed: u64) -> MaterialModel {
        let mut rng = SplitMix64::new(seed);
        MaterialModel::anisotropic(
            TensorField::constant(random_tensor(&mut rng, 4)),
            TensorField::constant(random_tensor(&mut rng, 4)),
            TensorField::constant(random_tensor(&mut rng, 6)),
            TensorField::constant(random_tensor(&mut rng, 4)),
            TensorField::constant(random_tensor(&mut rng, 5)),
            TensorField::constant(random_tensor(&mut rng, 5)),
        )
        .unwrap()
    }

    fn inhomogeneous_material(seed: u64) -> MaterialModel {
        anisotropic_material(seed).with_modulations([
            parse("1 + 0.2*x1").unwrap(),
            parse("1 - 0.1*x2 + 0.05*x3").unwrap(),
            parse("1 + 0.1*sin(x3)").unwrap(),
            parse("1 + 0.08*x1*x2").unwrap(),
            parse("exp(0.05*x2)").unwrap(),
            parse("1 - 0.12*x1").unwrap(),
        ])
    }

    fn rich_u_phi() -> ([Expr; 3], [Expr; 9]) {
        let u = [
            parse("x1^2 + 0.3*x2*x3 - 0.2*x1").unwrap(),
            parse("0.5*x2^2 - 0.2*x1*x3 + 0.1*x3").unwrap(),
            parse("x3^2 + 0.1*x1*x2 + 0.4*x2").unwrap(),
        ];
        let phi = [
            parse("0.2*x1 + 0.1*x2^2").unwrap(),
            parse("0.3*x2*x3 - 0.05").unwrap(),
            parse("0.1*x3^2 + 0.2*x1").unwrap(),
            parse("0.15*x1*x2").unwrap(),
            parse("0.25*x1 - 0.1*x3 + 0.1").unwrap(),
            parse("0.2*x2^2 - 0.1*x1").unwrap(),
            parse("0.05*x1*x3 + 0.3*x2").unwrap(),
            parse("0.1*x2 - 0.2*x3^2").unwrap(),
            parse("0.3*x3 + 0.2*x1^2").unwrap(),
        ];
        (u, phi)
    }

    fn rich_fields() -> FieldSet {
        let (u, phi) = rich_u_phi();
        let bf = [
            parse("0.3 + 0.1*x1").unwrap(),
            parse("0.2*x2 - 0.1").unwrap(),
            parse("0.15*x3").unwrap(),
        ];
        let bc: [Expr; 9] = core::array::from_fn(|i| {
            parse(&alloc::format!("0.1 + 0.0{}*x{}", i % 9 + 1, i % 3 + 1)).unwrap()
        });
        FieldSet::new(u, phi, bf, bc, Domain::unit_box()).unwrap()
    }

    fn eval_at(x: [f64; 3]) -> PointEvaluation {
        PointEvaluation::new(&rich_fields(), &inhomogeneous_material(131), x, EnergyConvention::Full)
            .unwrap()
    }

    #[test]
    fn translation_flux_recovers_eshelby_rows() {
        let eval = eval_at([0.3, -0.25, 0.4]);
        let p = eval.eshelby_stress();
        for k in 0..3 {
            let flux = eval.general_flux(&GeneratorTriple::translation(k));
            for i in 0..3 {
                assert!((flux.get(&[i]) - p.get(&[k, i])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rotation_flux_recovers_angular_momentum_rows() {
        let eval = eval_at([0.35, 0.2, -0.3]);
        let (m_total, _, _) = eval.angular_momentum();
        for k in 0..3 {
            let flux = eval.general_flux(&GeneratorTriple::rotation(k));
            for i in 0..3 {
                assert!(
                    (flux.get(&[i]) - m_total.get(&[k, i])).abs() <= 1e-12,
                    "k={k} i={i}"
                );
            }
        }
    }

    #[test]
    fn scaling_generator_recovers_scaling_flux() {
        let eval = eval_at([-0.2, 0.45, 0.15]);
        let dims = ScalingDims::default();
        let y = eval.scaling_flux(dims);
        let flux = eval.general_flux(&GeneratorTriple::scaling(dims));
        assert!(flux.sub(&y).max_abs() <= 1e-12);
    }

    #[test]
    fn zero_generator_gives_zero_flux() {
        let eval = eval_at([0.1, 0.1, 0.1]);
        let gen = GeneratorTriple {
            x_shift: Box::new(|_| Tensor::zeros(1)),
            u_shift: Box::new(|_| Tensor::zeros(1)),
            phi_shift: Box::new(|_| Tensor::zeros(2)),
        };
        assert_eq!(eval.general_flux(&gen).max_abs(), 0.0);
    }

    #[test]
    fn dual_formulas_agree_on_class_conforming_material() {
        let dims = ScalingDims::default();
        for x in [[0.3, -0.25, 0.4], [-0.15, 0.5, -0.45], [0.0, 0.0, 0.0]] {
            let eval = eval_at(x);
            let p = eval.eshelby_stress();
            let p0 = eval.eshelby_stress_via_conjugates();
            assert!(p.sub(&p0).max_abs() <= 1e-14);
            let (m, _, _) = eval.angular_momentum();
            let m0 = eval.angular_momentum_via_conjugates();
            assert!(m.sub(&m0).max_abs() <= 1e-14);
            let y = eval.scaling_flux(dims);
            let y0 = eval.scaling_flux_via_conjugates(dims);
            assert!(y.sub(&y0).max_abs() <= 1e-14);
        }
    }

    #[test]
    fn orbital_plus_spin_is_total() {
        let eval = eval_at([0.42, -0.33, 0.27]);
        let (total, orbital, spin) = eval.angular_momentum();
        assert!(total.sub(&orbital.add(&spin)).max_abs() <= 1e-12);
    }

    #[test]
    fn orbital_part_vanishes_at_origin() {
        let eval = eval_at([0.0, 0.0, 0.0]);
        let (_, orbital, _) = eval.angular_momentum();
        assert_eq!(orbital.max_abs(), 0.0);
    }

    #[test]
    fn scaling_dims_in_three_dimensions() {
        let dims = ScalingDims::for_dimension(3);
        assert_eq!(dims.d_u, -0.5);
        assert_eq!(dims.d_phi, -1.5);
        let d2 = ScalingDims::for_dimension(2);
        assert_eq!(d2.d_u, 0.0);
        assert_eq!(d2.d_phi, -1.0);
    }

    #[test]
    fn homogeneous_material_constant_sources_no_force() {
        let u = [parse("x1^2").unwrap(), parse("x2*x3").unwrap(), parse("x3").unwrap()];
        let phi: [Expr; 9] = core::array::from_fn(|i| {
            parse(&alloc::format!("0.1*x{}", i % 3 + 1)).unwrap()
        });
        let bf = [parse("0.3").unwrap(), parse("-0.1").unwrap(), parse("0.2").unwrap()];
        let bc: [Expr; 9] = core::array::from_fn(|_| parse("0.05").unwrap());
        let fields = FieldSet::new(u, phi, bf, bc, Domain::unit_box()).unwrap();
        let m = anisotropic_material(7);
        let f = inhomogeneity_force(&fields, &m, [0.3, 0.2, 0.1]).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn linear_material_scaling_gives_quadratic_form() {
        // A(x) = (1 + x1) A0, everything else constant: the force's
        // first component is -gamma:A0:gamma / 2, others zero.
        let base = anisotropic_material(97);
        let one = Expr::one;
        let m = base.with_modulations([
            parse("1 + x1").unwrap(),
            one(),
            one(),
            one(),
            one(),
            one(),
        ]);
        let (u, phi) = rich_u_phi();
        let fields = FieldSet::without_sources(u, phi, Domain::unit_box()).unwrap();
        let x = [0.3, -0.2, 0.25];
        let eval = PointEvaluation::new(&fields, &m, x, EnergyConvention::Full).unwrap();
        let f = eval.inhomogeneity_force();
        let a0 = base.at(x).a;
        let want = -0.5 * crate::material::quad_form(&a0, &eval.strains.gamma, &eval.strains.gamma);
        assert!((f.get(&[0]) - want).abs() <= 1e-13);
        assert!(f.get(&[1]).abs() <= 1e-13);
        assert!(f.get(&[2]).abs() <= 1e-13);
    }

    #[test]
    fn inhomogeneity_force_matches_frozen_argument_differences() {
        let m = inhomogeneous_material(113);
        let fields = rich_fields();
        let x = [0.25, -0.35, 0.4];
        let eval = PointEvaluation::new(&fields, &m, x, EnergyConvention::Full).unwrap();
        let f = eval.inhomogeneity_force();
        // W(y) with strains and field values frozen at x
        let frozen_w = |y: [f64; 3]| {
            let mp = m.at(y);
            let by = fields.evaluate_jet(y).unwrap();
            let ss = stresses(&mp, &eval.strains).unwrap();
            0.5 * (ss.t.inner(&eval.strains.gamma)
                + ss.s.inner(&eval.strains.e)
                + ss.m.inner(&eval.strains.kappa))
                - eval.sample.u.value.inner(&by.body_force.value)
                - eval.sample.phi.value.inner(&by.body_couple.value)
        };
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = -(frozen_w(xp) - frozen_w(xm)) / (2.0 * h);
            assert!(
                (f.get(&[k]) - fd).abs() <= 1e-6,
                "component {k}: {} vs {}",
                f.get(&[k]),
                fd
            );
        }
    }

    #[test]
    fn exact_divergences_match_finite_differences_off_shell() {
        // The assembly identities hold for ANY smooth configuration,
        // solution or not; this is the strongest oracle for them.
        let m = inhomogeneous_material(211);
        let fields = rich_fields();
        let dims = ScalingDims::default();
        let x = [0.3, -0.2, 0.35];
        let eval = PointEvaluation::new(&fields, &m, x, EnergyConvention::Full).unwrap();
        let h = 1e-5;
        let p_field = |y: [f64; 3]| {
            PointEvaluation::new(&fields, &m, y, EnergyConvention::Full)
                .unwrap()
                .eshelby_stress()
        };
        let fd_p = fd_divergence(&p_field, x, h);
        assert!(
            eval.eshelby_divergence().sub(&fd_p).max_abs() <= 1e-6,
            "{:e}",
            eval.eshelby_divergence().sub(&fd_p).max_abs()
        );
        let m_field = |y: [f64; 3]| {
            PointEvaluation::new(&fields, &m, y, EnergyConvention::Full)
                .unwrap()
                .angular_momentum()
                .0
        };
        let fd_m = fd_divergence(&m_field, x, h);
        assert!(
            eval.angular_momentum_divergence().sub(&fd_m).max_abs() <= 1e-6,
            "{:e}",
            eval.angular_momentum_divergence().sub(&fd_m).max_abs()
        );
        let y_field = |y: [f64; 3]| {
            PointEvaluation::new(&fields, &m, y, EnergyConvention::Full)
                .unwrap()
                .scaling_flux(dims)
        };
        let fd_y = fd_divergence(&y_field, x, h).as_scalar();
        assert!(
            (eval.scaling_divergence(dims) - fd_y).abs() <= 1e-6,
            "{:e}",
            (eval.scaling_divergence(dims) - fd_y).abs()
        );
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let m = inhomogeneous_material(223);
        let fields = rich_fields();
        for convention in [EnergyConvention::Full, EnergyConvention::WithoutSources] {
            let x = [0.15, 0.3, -0.4];
            let eval = PointEvaluation::new(&fields, &m, x, convention).unwrap();
            let grad = eval.energy_gradient();
            let w_at = |y: [f64; 3]| {
                PointEvaluation::new(&fields, &m, y, convention).unwrap().energy
            };
            let h = 1e-5;
            for k in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (w_at(xp) - w_at(xm)) / (2.0 * h);
                assert!(
                    (grad.get(&[k]) - fd).abs() <= 1e-6,
                    "{convention:?} component {k}"
                );
            }
        }
    }

    #[test]
    fn isotropy_bracket_vanishes_only_for_isotropic_materials() {
        let mut rng = SplitMix64::new(19);
        let mut coeff_c = [0.0; 15];
        for v in coeff_c.iter_mut() {
            *v = rng.range(0.1, 0.4);
        }
        let iso = MaterialModel::isotropic(&IsotropicSpec {
            coeff_a: [0.45, 0.35, 0.25],
            coeff_b: [0.3, 0.25, 0.2],
            coeff_c,
            coeff_e: [0.2, 0.15, 0.1],
        });
        let fields = rich_fields();
        for x in [[0.3, 0.2, -0.4], [-0.5, 0.1, 0.35]] {
            let eval = PointEvaluation::new(&fields, &iso, x, EnergyConvention::Full).unwrap();
            let src = eval.rotational_source();
            assert!(
                src.bracket.max_abs() <= 1e-10,
                "isotropic bracket {:e}",
                src.bracket.max_abs()
            );
            let aniso_eval = eval_at(x);
            let aniso_src = aniso_eval.rotational_source();
            assert!(aniso_src.bracket.max_abs() > 1e-3);
        }
    }

    #[test]
    fn fd_balance_variant_agrees_with_exact() {
        let m = inhomogeneous_material(307);
        let fields = rich_fields();
        let dims = ScalingDims::default();
        let x = [0.2, 0.3, -0.25];
        let exact = balance_residuals(&fields, &m, x, dims).unwrap();
        let fd = balance_residuals_fd(&fields, &m, x, dims, 1e-5).unwrap();
        assert!(exact
            .translational
            .sub(&fd.translational)
            .max_abs()
            <= 1e-5);
        assert!(exact.rotational.sub(&fd.rotational).max_abs() <= 1e-5);
        assert!((exact.scaling - fd.scaling).abs() <= 1e-5);
        // generic configuration: fields are not a solution
        assert!(exact.off_shell);
    }
}
