//! Deterministic generators and independent oracles for test code.
//!
//! Everything here is seeded through [`SplitMix64`], so any failure is
//! reproducible from the seed alone. Gated behind the `testkit` feature;
//! nothing in this module is part of the library proper.

use alloc::vec;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::fields::{Domain, FieldSet};
use crate::material::{
    symmetry_spec_a, symmetry_spec_b, symmetry_spec_c, symmetry_spec_e, symmetry_spec_f,
    symmetry_spec_g, IsotropicSpec, MaterialModel, TensorField,
};
use crate::rng::SplitMix64;
use crate::scenarios::{builtin, Scenario};
use crate::tensor::{symmetrize, SymmetrySpec, Tensor, DIM};

/// Dense random tensor, entries uniform in `[-amplitude, amplitude)`.
pub fn random_tensor(rng: &mut SplitMix64, rank: usize, amplitude: f64) -> Tensor {
    Tensor::from_fn(rank, |_| rng.range(-amplitude, amplitude))
}

/// Random member of a symmetry class: a dense draw projected onto the
/// class by group averaging.
pub fn random_class_tensor(
    rng: &mut SplitMix64,
    rank: usize,
    spec: &SymmetrySpec,
    amplitude: f64,
) -> Tensor {
    symmetrize(&random_tensor(rng, rank, amplitude), spec).expect("spec rank matches")
}

/// Random proper rotation: uniform axis direction, uniform angle.
pub fn random_rotation(rng: &mut SplitMix64) -> Tensor {
    let axis = loop {
        let a = [
            rng.range(-1.0, 1.0),
            rng.range(-1.0, 1.0),
            rng.range(-1.0, 1.0),
        ];
        let n2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        if n2 > 1e-3 && n2 < 1.0 {
            break a;
        }
    };
    crate::tensor::rotation_matrix(axis, rng.range(0.0, 2.0 * crate::integrals::PI))
}

fn base_spec(rng: &mut SplitMix64) -> IsotropicSpec {
    let mut coeff_c = [0.0; 15];
    for c in &mut coeff_c {
        *c = rng.range(0.15, 0.45);
    }
    IsotropicSpec {
        coeff_a: [rng.range(0.3, 0.6), rng.range(0.2, 0.5), rng.range(0.2, 0.5)],
        coeff_b: [rng.range(0.3, 0.6), rng.range(0.2, 0.5), rng.range(0.2, 0.5)],
        coeff_e: [rng.range(0.2, 0.4), rng.range(0.1, 0.3), rng.range(0.1, 0.3)],
        coeff_c,
    }
}

/// Homogeneous fully anisotropic material: a random isotropic base plus
/// class-symmetric perturbations, all six tensors populated.
pub fn random_material(rng: &mut SplitMix64) -> MaterialModel {
    let base = MaterialModel::isotropic(&base_spec(rng)).at([0.0; 3]);
    let a = base.a.add(&random_class_tensor(rng, 4, &symmetry_spec_a(), 0.2));
    let b = base.b.add(&random_class_tensor(rng, 4, &symmetry_spec_b(), 0.2));
    let c = base.c.add(&random_class_tensor(rng, 6, &symmetry_spec_c(), 0.2));
    let e = base.e.add(&random_class_tensor(rng, 4, &symmetry_spec_e(), 0.15));
    let f = random_class_tensor(rng, 5, &symmetry_spec_f(), 0.12);
    let g = random_class_tensor(rng, 5, &symmetry_spec_g(), 0.12);
    MaterialModel::anisotropic(
        TensorField::constant(a),
        TensorField::constant(b),
        TensorField::constant(c),
        TensorField::constant(e),
        TensorField::constant(f),
        TensorField::constant(g),
    )
    .expect("ranks are correct")
}

/// Anisotropic material with a random gentle linear modulation on every
/// tensor, so all six material gradients are nonzero.
pub fn random_inhomogeneous_material(rng: &mut SplitMix64) -> MaterialModel {
    let homogeneous = random_material(rng);
    let mut modulation = || {
        Expr::one()
            .add(&Expr::var(0).scale(rng.range(-0.15, 0.15)))
            .add(&Expr::var(1).scale(rng.range(-0.15, 0.15)))
            .add(&Expr::var(2).scale(rng.range(-0.15, 0.15)))
    };
    homogeneous.with_modulations([
        modulation(),
        modulation(),
        modulation(),
        modulation(),
        modulation(),
        modulation(),
    ])
}

/// Random polynomial in x1, x2, x3 of total degree at most `degree`,
/// coefficients uniform in `[-amplitude, amplitude)`.
pub fn random_polynomial(rng: &mut SplitMix64, degree: u32, amplitude: f64) -> Expr {
    let mut acc = Expr::zero();
    for p1 in 0..=degree {
        for p2 in 0..=(degree - p1) {
            for p3 in 0..=(degree - p1 - p2) {
                let mut term = Expr::constant(rng.range(-amplitude, amplitude));
                for (var, pow) in [(0, p1), (1, p2), (2, p3)] {
                    if pow > 0 {
                        term = term.mul(&Expr::var(var).powi(pow as i32));
                    }
                }
                acc = acc.add(&term);
            }
        }
    }
    acc
}

/// Random polynomial fields with independently random polynomial
/// sources: a generic off-shell configuration.
pub fn random_fields(rng: &mut SplitMix64, degree: u32, domain: Domain) -> FieldSet {
    let mut poly = |amp: f64| random_polynomial(rng, degree, amp);
    let u = [poly(0.4), poly(0.4), poly(0.4)];
    let phi: [Expr; 9] = core::array::from_fn(|_| poly(0.3));
    let bf: [Expr; 3] = core::array::from_fn(|_| poly(0.3));
    let bc: [Expr; 9] = core::array::from_fn(|_| poly(0.2));
    FieldSet::new(u, phi, bf, bc, domain).expect("polynomials are finite")
}

/// Random polynomial fields with zero sources.
pub fn random_source_free_fields(rng: &mut SplitMix64, degree: u32, domain: Domain) -> FieldSet {
    let mut poly = |amp: f64| random_polynomial(rng, degree, amp);
    let u = [poly(0.4), poly(0.4), poly(0.4)];
    let phi: [Expr; 9] = core::array::from_fn(|_| poly(0.3));
    FieldSet::without_sources(u, phi, domain).expect("polynomials are finite")
}

/// The isotropic homogeneous builtin with the micro-distortion removed:
/// same displacement, phi = 0, so the micro-curvature vanishes and with
/// it the only term that breaks scaling symmetry. Still an exact
/// solution with zero sources.
pub fn kappa_free_isotropic() -> Scenario {
    let base = builtin("isotropic_homogeneous").expect("builtin exists");
    let u = base.fields.u_exprs();
    let phi: [Expr; 9] = core::array::from_fn(|_| Expr::zero());
    let fields = FieldSet::without_sources(u, phi, base.fields.domain().clone())
        .expect("fields are finite");
    let mut scenario = Scenario::prescribed("isotropic_kappa_free", base.material, fields, base.rule)
        .expect("geometry unchanged");
    scenario.dims = base.dims;
    scenario.tolerances = base.tolerances;
    scenario
}

/// Loop-based tensor contraction, written independently of
/// [`crate::tensor::contract`] to serve as its oracle. Free slots of
/// `a` precede free slots of `b` in the result, matching the library
/// convention.
pub fn naive_contract(a: &Tensor, b: &Tensor, pairing: &[(usize, usize)]) -> Tensor {
    let free_a: Vec<usize> = (0..a.rank())
        .filter(|s| !pairing.iter().any(|&(sa, _)| sa == *s))
        .collect();
    let free_b: Vec<usize> = (0..b.rank())
        .filter(|s| !pairing.iter().any(|&(_, sb)| sb == *s))
        .collect();
    Tensor::from_fn(free_a.len() + free_b.len(), |out| {
        let mut ia = [0usize; crate::tensor::MAX_RANK];
        let mut ib = [0usize; crate::tensor::MAX_RANK];
        for (n, &s) in free_a.iter().enumerate() {
            ia[s] = out[n];
        }
        for (n, &s) in free_b.iter().enumerate() {
            ib[s] = out[free_a.len() + n];
        }
        let mut sum = 0.0;
        let mut counter = vec![0usize; pairing.len()];
        loop {
            for (n, &(sa, sb)) in pairing.iter().enumerate() {
                ia[sa] = counter[n];
                ib[sb] = counter[n];
            }
            sum += a.get(&ia[..a.rank()]) * b.get(&ib[..b.rank()]);
            let mut pos = pairing.len();
            loop {
                if pos == 0 {
                    return sum;
                }
                counter[pos - 1] += 1;
                if counter[pos - 1] < DIM {
                    break;
                }
                counter[pos - 1] = 0;
                pos -= 1;
            }
        }
    })
}
