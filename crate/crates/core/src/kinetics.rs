//! Strain measures, constitutive stress evaluation, energy density,
//! and the pointwise field equations.
//!
//! Strains from the field jets:
//!   gamma_kl = u_{k,l} - phi_kl      (relative distortion)
//!   e_kl     = (phi_kl + phi_lk)/2   (micro-strain, symmetric)
//!   kappa_klm = phi_{kl,m}           (micro-distortion gradient)
//!
//! Stresses (force stress t, micro-stress s, double stress m):
//!   t_ij  = A_ijkl gamma_kl + E_ijkl e_kl     + F_ijklm kappa_klm
//!   s_ij  = E_klij gamma_kl + B_ijkl e_kl     + G_ijklm kappa_klm
//!   m_ijk = F_lmijk gamma_lm + G_lmijk e_lm   + C_ijklmn kappa_lmn
//!
//! Field equations (residual form returned by
//! [`euler_lagrange_residual`]; both vanish on-shell):
//!   D_i t_{alpha i} + F_alpha
//!   D_i m_{alpha beta i} + (t - s)_{alpha beta} + L_{alpha beta}

use thiserror::Error;

use crate::fields::{FieldError, FieldSample, FieldSet, JetBundle};
use crate::material::{MaterialGradients, MaterialModel, MaterialPoint};
use crate::tensor::{contract, Tensor, TensorError};

/// Micro-stress asymmetry beyond this is a constitutive inconsistency,
/// not rounding.
pub const MICRO_STRESS_ASYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KineticsError {
    #[error(
        "micro-stress came out asymmetric (max deviation {max_dev:e}); \
         the coupling tensor E must be symmetric in its last index pair"
    )]
    AsymmetricMicroStress { max_dev: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// The three strain measures at a point.
#[derive(Clone, Debug)]
pub struct StrainState {
    pub gamma: Tensor,
    pub e: Tensor,
    pub kappa: Tensor,
}

/// Spatial gradients of the strain measures, derivative slot last.
#[derive(Clone, Debug)]
pub struct StrainGradients {
    pub gamma: Tensor,
    pub e: Tensor,
    pub kappa: Tensor,
}

/// The three stresses at a point.
#[derive(Clone, Debug)]
pub struct StressState {
    pub t: Tensor,
    pub s: Tensor,
    pub m: Tensor,
}

/// Whether the energy density subtracts the source work terms
/// u.F + phi:L. The balance laws close exactly only with the sources
/// included; the reduced convention is kept for studying source-free
/// truncations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyConvention {
    Full,
    WithoutSources,
}

pub fn strains(sample: &FieldSample) -> StrainState {
    let gamma = sample
        .u
        .gradient
        .sub(&sample.phi.value);
    let e = sample
        .phi
        .value
        .add(&sample.phi.value.permute_slots(&[1, 0]))
        .scale(0.5);
    let kappa = sample.phi.gradient.clone();
    StrainState { gamma, e, kappa }
}

pub fn strain_gradients(sample: &FieldSample) -> StrainGradients {
    // gamma_{kl,i} = u_{k,li} - phi_{kl,i}
    let gamma = sample.u.hessian.sub(&sample.phi.gradient);
    // e_{kl,i} = (phi_{kl,i} + phi_{lk,i})/2
    let e = sample
        .phi
        .gradient
        .add(&sample.phi.gradient.permute_slots(&[1, 0, 2]))
        .scale(0.5);
    let kappa = sample.phi.hessian.clone();
    StrainGradients { gamma, e, kappa }
}

/// Evaluates the three constitutive laws. The micro-stress is
/// symmetrized defensively; genuine asymmetry is an error.
pub fn stresses(mp: &MaterialPoint, st: &StrainState) -> Result<StressState, KineticsError> {
    let pair = [(2usize, 0usize), (3, 1)];
    let t = {
        let mut t = contract(&mp.a, &st.gamma, &pair)?;
        t = t.add(&contract(&mp.e, &st.e, &pair)?);
        t.add(&contract(&mp.f, &st.kappa, &[(2, 0), (3, 1), (4, 2)])?)
    };
    let s_raw = {
        // E enters through its FIRST index pair here: s_ij = E_klij gamma_kl
        let mut s = contract(&mp.e, &st.gamma, &[(0, 0), (1, 1)])?;
        s = s.add(&contract(&mp.b, &st.e, &pair)?);
        s.add(&contract(&mp.g, &st.kappa, &[(2, 0), (3, 1), (4, 2)])?)
    };
    let s = s_raw.add(&s_raw.permute_slots(&[1, 0])).scale(0.5);
    let max_dev = s_raw.sub(&s).max_abs();
    if max_dev > MICRO_STRESS_ASYMMETRY_TOL {
        return Err(KineticsError::AsymmetricMicroStress { max_dev });
    }
    let m = {
        let mut m = contract(&mp.f, &st.gamma, &[(0, 0), (1, 1)])?;
        m = m.add(&contract(&mp.g, &st.e, &[(0, 0), (1, 1)])?);
        m.add(&contract(&mp.c, &st.kappa, &[(3, 0), (4, 1), (5, 2)])?)
    };
    Ok(StressState { t, s, m })
}

/// Energy-gradient stresses: tau = dW/d(grad u), mu = dW/d(grad phi),
/// computed by explicit symmetrization of A and C rather than by
/// assuming their symmetry classes. With class-conforming materials
/// tau equals t and mu equals m; this is the independent path that
/// verifies it.
pub fn energy_conjugates(mp: &MaterialPoint, st: &StrainState) -> (Tensor, Tensor) {
    let pair = [(2usize, 0usize), (3, 1)];
    let a_sym = mp.a.add(&mp.a.permute_slots(&[2, 3, 0, 1])).scale(0.5);
    let c_sym = mp.c.add(&mp.c.permute_slots(&[3, 4, 5, 0, 1, 2])).scale(0.5);
    let tau = contract(&a_sym, &st.gamma, &pair)
        .expect("rank 4 against rank 2")
        .add(&contract(&mp.e, &st.e, &pair).expect("rank 4 against rank 2"))
        .add(
            &contract(&mp.f, &st.kappa, &[(2, 0), (3, 1), (4, 2)])
                .expect("rank 5 against rank 3"),
        );
    let mu = contract(&mp.f, &st.gamma, &[(0, 0), (1, 1)])
        .expect("rank 5 against rank 2")
        .add(&contract(&mp.g, &st.e, &[(0, 0), (1, 1)]).expect("rank 5 against rank 2"))
        .add(
            &contract(&c_sym, &st.kappa, &[(3, 0), (4, 1), (5, 2)])
                .expect("rank 6 against rank 3"),
        );
    (tau, mu)
}

/// Energy density from already-computed stresses:
/// W = (t:gamma + s:e + m:kappa)/2 - u.F - phi:L
/// (source terms only under [`EnergyConvention::Full`]).
pub fn energy_density(
    st: &StrainState,
    ss: &StressState,
    bundle: &JetBundle,
    convention: EnergyConvention,
) -> f64 {
    let mut w = 0.5 * (ss.t.inner(&st.gamma) + ss.s.inner(&st.e) + ss.m.inner(&st.kappa));
    if convention == EnergyConvention::Full {
        w -= bundle.u.value.inner(&bundle.body_force.value);
        w -= bundle.phi.value.inner(&bundle.body_couple.value);
    }
    w
}

/// Energy density straight from the quadratic form, bypassing the
/// stresses. Cross-checks [`energy_density`].
pub fn energy_density_quadratic(
    mp: &MaterialPoint,
    st: &StrainState,
    bundle: &JetBundle,
    convention: EnergyConvention,
) -> f64 {
    let pair2 = [(2usize, 0usize), (3, 1)];
    let pair3 = [(2usize, 0usize), (3, 1), (4, 2)];
    let a_g = contract(&mp.a, &st.gamma, &pair2).expect("rank 4 against rank 2");
    let e_e = contract(&mp.e, &st.e, &pair2).expect("rank 4 against rank 2");
    let b_e = contract(&mp.b, &st.e, &pair2).expect("rank 4 against rank 2");
    let f_k = contract(&mp.f, &st.kappa, &pair3).expect("rank 5 against rank 3");
    let g_k = contract(&mp.g, &st.kappa, &pair3).expect("rank 5 against rank 3");
    let c_k = contract(&mp.c, &st.kappa, &[(3, 0), (4, 1), (5, 2)]).expect("rank 6 against rank 3");
    let mut w = 0.5 * st.gamma.inner(&a_g)
        + st.gamma.inner(&e_e)
        + 0.5 * st.e.inner(&b_e)
        + st.gamma.inner(&f_k)
        + st.e.inner(&g_k)
        + 0.5 * st.kappa.inner(&c_k);
    if convention == EnergyConvention::Full {
        w -= bundle.u.value.inner(&bundle.body_force.value);
        w -= bundle.phi.value.inner(&bundle.body_couple.value);
    }
    w
}

/// Exact divergences of the force stress and double stress:
/// (div t)_alpha = D_i t_{alpha i},  (div m)_{alpha beta} = D_i m_{alpha beta i}.
/// Product rule over the constitutive laws: material-gradient terms
/// plus material-times-strain-gradient terms.
pub fn stress_divergences(
    mp: &MaterialPoint,
    mg: &MaterialGradients,
    st: &StrainState,
    sg: &StrainGradients,
) -> (Tensor, Tensor) {
    let c2 = |t4: &Tensor, r2: &Tensor| contract(t4, r2, &[(1, 0), (2, 1)]).expect("trace form");
    // div t: derivative index is t's second slot, i.e. slot 1 of A/E/F.
    // Material part: (d_i A)_{alpha i k l} gamma_kl = trace(gradA, 1, 4) : gamma
    let mut div_t = c2(&mg.a.trace(1, 4), &st.gamma);
    div_t = div_t.add(&c2(&mg.e.trace(1, 4), &st.e));
    div_t = div_t.add(
        &contract(&mg.f.trace(1, 5), &st.kappa, &[(1, 0), (2, 1), (3, 2)])
            .expect("rank 4 against rank 3"),
    );
    // Strain part: A_{alpha i k l} gamma_{kl,i}
    div_t = div_t.add(&contract(&mp.a, &sg.gamma, &[(1, 2), (2, 0), (3, 1)]).expect("div form"));
    div_t = div_t.add(&contract(&mp.e, &sg.e, &[(1, 2), (2, 0), (3, 1)]).expect("div form"));
    div_t = div_t.add(
        &contract(&mp.f, &sg.kappa, &[(1, 3), (2, 0), (3, 1), (4, 2)]).expect("div form"),
    );
    // div m: derivative index is m's third slot. m_ijk = F_lmijk gamma_lm +
    // G_lmijk e_lm + C_ijklmn kappa_lmn, so the derivative hits F/G slot 4
    // and C slot 2.
    let first_pair = |t4: &Tensor, r2: &Tensor| {
        contract(t4, r2, &[(0, 0), (1, 1)]).expect("rank 4 against rank 2")
    };
    let mut div_m = first_pair(&mg.f.trace(4, 5), &st.gamma);
    div_m = div_m.add(&first_pair(&mg.g.trace(4, 5), &st.e));
    div_m = div_m.add(
        &contract(&mg.c.trace(2, 6), &st.kappa, &[(2, 0), (3, 1), (4, 2)])
            .expect("rank 5 against rank 3"),
    );
    div_m = div_m.add(
        &contract(&mp.f, &sg.gamma, &[(0, 0), (1, 1), (4, 2)]).expect("div form"),
    );
    div_m = div_m.add(&contract(&mp.g, &sg.e, &[(0, 0), (1, 1), (4, 2)]).expect("div form"));
    div_m = div_m.add(
        &contract(&mp.c, &sg.kappa, &[(2, 3), (3, 0), (4, 1), (5, 2)]).expect("div form"),
    );
    (div_t, div_m)
}

/// Both field-equation residuals at `x`: the force balance
/// D_i t_{alpha i} + F_alpha (rank 1) and the micro-balance
/// D_i m_{alpha beta i} + (t - s)_{alpha beta} + L_{alpha beta} (rank 2).
pub fn euler_lagrange_residual(
    fields: &FieldSet,
    material: &MaterialModel,
    x: [f64; 3],
) -> Result<(Tensor, Tensor), KineticsError> {
    let bundle = fields.evaluate_jet(x)?;
    let sample = FieldSample::from_bundle(&bundle);
    let st = strains(&sample);
    let sg = strain_gradients(&sample);
    let mp = material.at(x);
    let mg = material.gradients_at(x);
    let ss = stresses(&mp, &st)?;
    let (div_t, div_m) = stress_divergences(&mp, &mg, &st, &sg);
    let force = div_t.add(&bundle.body_force.value);
    let micro = div_m
        .add(&ss.t.sub(&ss.s))
        .add(&bundle.body_couple.value);
    Ok((force, micro))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};
    use crate::fields::{fd_divergence, Domain};
    use crate::material::{IsotropicSpec, TensorField};
    use crate::rng::SplitMix64;

    fn random_tensor(rng: &mut SplitMix64, rank: usize) -> Tensor {
        Tensor::from_fn(rank, |_| rng.range(-0.6, 0.6))
    }

    fn random_material(seed: u64) -> MaterialModel {
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

    fn random_strains(seed: u64) -> StrainState {
        let mut rng = SplitMix64::new(seed);
        let gamma = random_tensor(&mut rng, 2);
        let e_raw = random_tensor(&mut rng, 2);
        let e = e_raw.add(&e_raw.permute_slots(&[1, 0])).scale(0.5);
        let kappa = random_tensor(&mut rng, 3);
        StrainState { gamma, e, kappa }
    }

    fn polynomial_fields() -> FieldSet {
        let u = [
            parse("x1^2 + 0.3*x2*x3").unwrap(),
            parse("0.5*x2^2 - 0.2*x1*x3").unwrap(),
            parse("x3^2 + 0.1*x1*x2").unwrap(),
        ];
        let phi = [
            parse("0.2*x1 + 0.1*x2^2").unwrap(),
            parse("0.3*x2*x3").unwrap(),
            parse("0.1*x3^2").unwrap(),
            parse("0.15*x1*x2").unwrap(),
            parse("0.25*x1 - 0.1*x3").unwrap(),
            parse("0.2*x2^2").unwrap(),
            parse("0.05*x1*x3").unwrap(),
            parse("0.1*x2").unwrap(),
            parse("0.3*x3 + 0.2*x1^2").unwrap(),
        ];
        let zero3 = [Expr::zero(), Expr::zero(), Expr::zero()];
        let zero9 = core::array::from_fn(|_| Expr::zero());
        FieldSet::new(u, phi, zero3, zero9, Domain::unit_box()).unwrap()
    }

    #[test]
    fn strains_match_definitions_entrywise() {
        let fields = polynomial_fields();
        let x = [0.3, -0.2, 0.45];
        let bundle = fields.evaluate_jet(x).unwrap();
        let sample = FieldSample::from_bundle(&bundle);
        let st = strains(&sample);
        for k in 0..3 {
            for l in 0..3 {
                let want = bundle.u.gradient.get(&[k, l]) - bundle.phi.value.get(&[k, l]);
                assert!((st.gamma.get(&[k, l]) - want).abs() <= 1e-15);
                let want_e =
                    0.5 * (bundle.phi.value.get(&[k, l]) + bundle.phi.value.get(&[l, k]));
                assert!((st.e.get(&[k, l]) - want_e).abs() <= 1e-15);
                for m in 0..3 {
                    assert_eq!(
                        st.kappa.get(&[k, l, m]),
                        bundle.phi.gradient.get(&[k, l, m])
                    );
                }
            }
        }
    }

    #[test]
    fn stresses_match_naive_loops() {
        let m = random_material(21);
        let mp = m.at([0.0; 3]);
        let st = random_strains(22);
        let ss = stresses(&mp, &st).unwrap();
        let mut t = Tensor::zeros(2);
        let mut s = Tensor::zeros(2);
        let mut dm = Tensor::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                let mut tv = 0.0;
                let mut sv = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        tv += mp.a.get(&[i, j, k, l]) * st.gamma.get(&[k, l]);
                        tv += mp.e.get(&[i, j, k, l]) * st.e.get(&[k, l]);
                        sv += mp.e.get(&[k, l, i, j]) * st.gamma.get(&[k, l]);
                        sv += mp.b.get(&[i, j, k, l]) * st.e.get(&[k, l]);
                        for q in 0..3 {
                            tv += mp.f.get(&[i, j, k, l, q]) * st.kappa.get(&[k, l, q]);
                            sv += mp.g.get(&[i, j, k, l, q]) * st.kappa.get(&[k, l, q]);
                        }
                    }
                }
                t.set(&[i, j], tv);
                s.set(&[i, j], sv);
                for k in 0..3 {
                    let mut mv = 0.0;
                    for l in 0..3 {
                        for q in 0..3 {
                            mv += mp.f.get(&[l, q, i, j, k]) * st.gamma.get(&[l, q]);
                            mv += mp.g.get(&[l, q, i, j, k]) * st.e.get(&[l, q]);
                            for r in 0..3 {
                                mv += mp.c.get(&[i, j, k, l, q, r]) * st.kappa.get(&[l, q, r]);
                            }
                        }
                    }
                    dm.set(&[i, j, k], mv);
                }
            }
        }
        assert!(ss.t.sub(&t).max_abs() <= 1e-12);
        assert!(ss.s.sub(&s).max_abs() <= 1e-12);
        assert!(ss.m.sub(&dm).max_abs() <= 1e-12);
    }

    #[test]
    fn micro_stress_is_symmetric() {
        let m = random_material(31);
        let st = random_strains(32);
        let ss = stresses(&m.at([0.0; 3]), &st).unwrap();
        assert!(ss.s.sub(&ss.s.permute_slots(&[1, 0])).max_abs() <= 1e-15);
    }

    #[test]
    fn asymmetric_coupling_rejected() {
        // Bypass the MaterialModel constructor to feed an E that is NOT
        // symmetric in its last pair; the stress evaluation must notice.
        let mut rng = SplitMix64::new(41);
        let mut mp = random_material(41).at([0.0; 3]);
        mp.e = random_tensor(&mut rng, 4);
        let st = random_strains(42);
        match stresses(&mp, &st) {
            Err(KineticsError::AsymmetricMicroStress { max_dev }) => {
                assert!(max_dev > 1e-3)
            }
            other => panic!("expected asymmetry error, got {other:?}"),
        }
    }

    #[test]
    fn conjugates_equal_stresses_for_class_conforming_material() {
        let m = random_material(51);
        let mp = m.at([0.0; 3]);
        let st = random_strains(52);
        let ss = stresses(&mp, &st).unwrap();
        let (tau, mu) = energy_conjugates(&mp, &st);
        assert!(tau.sub(&ss.t).max_abs() <= 1e-14);
        assert!(mu.sub(&ss.m).max_abs() <= 1e-14);
    }

    #[test]
    fn conjugates_symmetrize_nonconforming_tensors() {
        // With a raw (non-major-symmetric) A, tau uses sym(A) while the
        // constitutive t uses A itself: they must differ.
        let mut rng = SplitMix64::new(61);
        let mut mp = random_material(61).at([0.0; 3]);
        mp.a = random_tensor(&mut rng, 4);
        let st = random_strains(62);
        let ss = stresses(&mp, &st).unwrap();
        let (tau, _) = energy_conjugates(&mp, &st);
        assert!(tau.sub(&ss.t).max_abs() > 1e-3);
    }

    #[test]
    fn energy_paths_agree() {
        let m = random_material(71);
        let fields = polynomial_fields();
        let x = [0.35, 0.6, -0.15];
        let bundle = fields.evaluate_jet(x).unwrap();
        let sample = FieldSample::from_bundle(&bundle);
        let st = strains(&sample);
        let mp = m.at(x);
        let ss = stresses(&mp, &st).unwrap();
        for convention in [EnergyConvention::Full, EnergyConvention::WithoutSources] {
            let w1 = energy_density(&st, &ss, &bundle, convention);
            let w2 = energy_density_quadratic(&mp, &st, &bundle, convention);
            assert!((w1 - w2).abs() <= 1e-12, "{convention:?}: {w1} vs {w2}");
        }
    }

    #[test]
    fn energy_conventions_differ_by_source_work() {
        let m = random_material(81);
        let u = [parse("x1^2").unwrap(), parse("x2").unwrap(), parse("x3").unwrap()];
        let phi: [Expr; 9] = core::array::from_fn(|i| {
            parse(&alloc::format!("0.1*x{}", i % 3 + 1)).unwrap()
        });
        let bf = [parse("1").unwrap(), parse("2").unwrap(), parse("-1").unwrap()];
        let bc: [Expr; 9] = core::array::from_fn(|_| parse("0.5").unwrap());
        let fields = FieldSet::new(u, phi, bf, bc, Domain::unit_box()).unwrap();
        let x = [0.2, 0.4, 0.6];
        let bundle = fields.evaluate_jet(x).unwrap();
        let sample = FieldSample::from_bundle(&bundle);
        let st = strains(&sample);
        let ss = stresses(&m.at(x), &st).unwrap();
        let full = energy_density(&st, &ss, &bundle, EnergyConvention::Full);
        let bare = energy_density(&st, &ss, &bundle, EnergyConvention::WithoutSources);
        let work = bundle.u.value.inner(&bundle.body_force.value)
            + bundle.phi.value.inner(&bundle.body_couple.value);
        assert!((bare - full - work).abs() <= 1e-14);
    }

    #[test]
    fn stress_divergences_match_finite_differences() {
        let base = random_material(91);
        let m = base.with_modulations([
            parse("1 + 0.2*x1").unwrap(),
            parse("1 - 0.1*x2").unwrap(),
            parse("1 + 0.15*sin(x3)").unwrap(),
            parse("1 + 0.1*x1*x2").unwrap(),
            parse("exp(0.05*x3)").unwrap(),
            parse("1 - 0.2*x1").unwrap(),
        ]);
        let fields = polynomial_fields();
        let x = [0.3, 0.55, 0.4];
        let bundle = fields.evaluate_jet(x).unwrap();
        let sample = FieldSample::from_bundle(&bundle);
        let st = strains(&sample);
        let sg = strain_gradients(&sample);
        let (div_t, div_m) = stress_divergences(&m.at(x), &m.gradients_at(x), &st, &sg);
        let t_at = |y: [f64; 3]| {
            let b = fields.evaluate_jet(y).unwrap();
            let s = FieldSample::from_bundle(&b);
            stresses(&m.at(y), &strains(&s)).unwrap().t
        };
        let m_at = |y: [f64; 3]| {
            let b = fields.evaluate_jet(y).unwrap();
            let s = FieldSample::from_bundle(&b);
            stresses(&m.at(y), &strains(&s)).unwrap().m
        };
        let fd_t = fd_divergence(&t_at, x, 1e-5);
        let fd_m = fd_divergence(&m_at, x, 1e-5);
        assert!(div_t.sub(&fd_t).max_abs() <= 1e-8, "{:e}", div_t.sub(&fd_t).max_abs());
        assert!(div_m.sub(&fd_m).max_abs() <= 1e-8, "{:e}", div_m.sub(&fd_m).max_abs());
    }

    #[test]
    fn residual_vanishes_for_isotropic_source_free_shear() {
        // u = (x2 x3, x1 x3, x1 x2) is divergence- and Laplacian-free;
        // with phi = 0 and homogeneous isotropic material both residuals
        // vanish identically (t = s = 0 needs phi = 0 and e = 0; here
        // gamma is symmetric traceless, so s = E:gamma need not vanish,
        // but div t and t - s do combine with L = -(t-s) manufactured).
        // Simplest honest check: manufacture sources by hand.
        let spec = IsotropicSpec {
            coeff_a: [0.45, 0.35, 0.35],
            coeff_b: [0.3, 0.25, 0.25],
            coeff_c: [
                0.2, 0.3, 0.25, 0.28, 0.22, 0.35, 0.3, 0.26, 0.24, 0.27, 0.33, 0.21, 0.29,
                0.31, 0.23,
            ],
            coeff_e: [0.2, 0.15, 0.15],
        };
        let m = MaterialModel::isotropic(&spec);
        let u = [
            parse("x2*x3").unwrap(),
            parse("x1*x3").unwrap(),
            parse("x1*x2").unwrap(),
        ];
        let phi: [Expr; 9] = core::array::from_fn(|_| Expr::zero());
        // With u harmonic and divergence-free, div t = 0 termwise for an
        // isotropic A (delta-combination of u_{alpha,ii}, u_{i,i alpha},
        // u_{i,alpha i}), so F = 0. The micro-balance needs
        // L = s - t = E^T : gamma - A : gamma.
        let mp = m.at([0.0; 3]);
        let fields_probe = FieldSet::new(
            u.clone(),
            phi.clone(),
            [Expr::zero(), Expr::zero(), Expr::zero()],
            core::array::from_fn(|_| Expr::zero()),
            Domain::unit_box(),
        )
        .unwrap();
        // record L(x) componentwise as expressions: gamma depends linearly
        // on x, so L does too; sample the coefficient structure directly.
        let l_at = |x: [f64; 3]| {
            let b = fields_probe.evaluate_jet(x).unwrap();
            let s = FieldSample::from_bundle(&b);
            let st = strains(&s);
            let ss = stresses(&mp, &st).unwrap();
            ss.s.sub(&ss.t)
        };
        // L is linear in x: L(x) = L0 + x1 D1 + x2 D2 + x3 D3
        let l0 = l_at([0.0; 3]);
        let d1 = l_at([1.0, 0.0, 0.0]).sub(&l0);
        let d2 = l_at([0.0, 1.0, 0.0]).sub(&l0);
        let d3 = l_at([0.0, 0.0, 1.0]).sub(&l0);
        let bc: [Expr; 9] = core::array::from_fn(|idx| {
            let i = [idx / 3, idx % 3];
            let c0 = Expr::constant(l0.get(&i));
            let t1 = Expr::var(0).scale(d1.get(&i));
            let t2 = Expr::var(1).scale(d2.get(&i));
            let t3 = Expr::var(2).scale(d3.get(&i));
            c0.add(&t1).add(&t2).add(&t3)
        });
        let fields = FieldSet::new(
            u,
            phi,
            [Expr::zero(), Expr::zero(), Expr::zero()],
            bc,
            Domain::unit_box(),
        )
        .unwrap();
        let mut rng = SplitMix64::new(17);
        for _ in 0..20 {
            let x = [
                rng.range(-0.9, 0.9),
                rng.range(-0.9, 0.9),
                rng.range(-0.9, 0.9),
            ];
            let (r1, r2) = euler_lagrange_residual(&fields, &m, x).unwrap();
            assert!(r1.max_abs() <= 1e-12, "force residual {:e}", r1.max_abs());
            assert!(r2.max_abs() <= 1e-12, "micro residual {:e}", r2.max_abs());
        }
    }
}
