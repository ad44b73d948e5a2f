//! Constitutive-law properties that hold for every class-symmetric
//! material: reciprocity of the stress-strain pairing, rotation
//! invariance of isotropic energies, and the eigenvalue indicator as a
//! true lower bound on the stored energy.

use micromorph_core::kinetics::{stresses, StrainState};
use micromorph_core::rng::SplitMix64;
use micromorph_core::tensor::{contract, rotate, Tensor};
use micromorph_core::material::{IsotropicSpec, MaterialModel};
use micromorph_core::testkit::{random_material, random_rotation, random_tensor};
use proptest::prelude::*;

fn symmetric_part(t: &Tensor) -> Tensor {
    Tensor::from_fn(2, |i| 0.5 * (t.get(&[i[0], i[1]]) + t.get(&[i[1], i[0]])))
}

fn random_strains(rng: &mut SplitMix64) -> StrainState {
    StrainState {
        gamma: random_tensor(rng, 2, 0.6),
        e: symmetric_part(&random_tensor(rng, 2, 0.6)),
        kappa: random_tensor(rng, 3, 0.6),
    }
}

/// Stored energy of a strain state: W = (t:g + s:e + m:k) / 2, valid
/// because the class tensors make the quadratic form self-adjoint.
fn energy(material: &MaterialModel, st: &StrainState) -> f64 {
    let ss = stresses(&material.at([0.0; 3]), st).unwrap();
    0.5 * (ss.t.inner(&st.gamma) + ss.s.inner(&st.e) + ss.m.inner(&st.kappa))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stress_strain_pairing_is_reciprocal(seed in any::<u64>()) {
        // <stress(1), strain(2)> = <stress(2), strain(1)>: the adjoint
        // placement of E, F, G between the three stresses is exactly
        // what makes a single stored-energy function exist.
        let mut rng = SplitMix64::new(seed);
        let material = random_material(&mut rng);
        let mp = material.at([0.0; 3]);
        let st1 = random_strains(&mut rng);
        let st2 = random_strains(&mut rng);
        let ss1 = stresses(&mp, &st1).unwrap();
        let ss2 = stresses(&mp, &st2).unwrap();
        let forward = ss1.t.inner(&st2.gamma) + ss1.s.inner(&st2.e) + ss1.m.inner(&st2.kappa);
        let backward = ss2.t.inner(&st1.gamma) + ss2.s.inner(&st1.e) + ss2.m.inner(&st1.kappa);
        prop_assert!((forward - backward).abs() <= 1e-12);
    }

    #[test]
    fn micro_stress_stays_symmetric(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let material = random_material(&mut rng);
        let st = random_strains(&mut rng);
        let ss = stresses(&material.at([0.0; 3]), &st).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((ss.s.get(&[i, j]) - ss.s.get(&[j, i])).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn stability_indicator_bounds_the_energy(seed in any::<u64>()) {
        // The smallest eigenvalue of the 45x45 modulus matrix is a lower
        // bound for 2W / |strain|^2 over all strain states.
        let mut rng = SplitMix64::new(seed);
        let material = random_material(&mut rng);
        let lambda_min = material.stability_indicator([0.0; 3]);
        for _ in 0..5 {
            let st = random_strains(&mut rng);
            let norm2 = st.gamma.inner(&st.gamma)
                + st.e.inner(&st.e)
                + st.kappa.inner(&st.kappa);
            let w = energy(&material, &st);
            prop_assert!(2.0 * w + 1e-9 >= lambda_min * norm2,
                "2W = {:.3e} below bound {:.3e}", 2.0 * w, lambda_min * norm2);
        }
    }

    #[test]
    fn isotropic_energy_is_rotation_invariant(seed in any::<u64>()) {
        // Rotating the strain state leaves the stored energy of an
        // isotropic material unchanged; this exercises the rank-4 and
        // the full 15-element rank-6 isotropic basis.
        let mut rng = SplitMix64::new(seed);
        let mut coeff_c = [0.0; 15];
        for c in &mut coeff_c {
            *c = rng.range(-0.4, 0.4);
        }
        let material = MaterialModel::isotropic(&IsotropicSpec {
            coeff_a: [rng.range(0.2, 0.6), rng.range(0.1, 0.5), rng.range(0.1, 0.5)],
            coeff_b: [rng.range(0.2, 0.6), rng.range(0.1, 0.5), rng.range(0.1, 0.5)],
            coeff_e: [rng.range(0.1, 0.4), rng.range(0.1, 0.3), rng.range(0.1, 0.3)],
            coeff_c,
        });
        let st = random_strains(&mut rng);
        let r = random_rotation(&mut rng);
        let rotated = StrainState {
            gamma: rotate(&st.gamma, &r, 1e-10).unwrap(),
            e: rotate(&st.e, &r, 1e-10).unwrap(),
            kappa: rotate(&st.kappa, &r, 1e-10).unwrap(),
        };
        prop_assert!((energy(&material, &st) - energy(&material, &rotated)).abs() <= 1e-10);
    }
}

#[test]
fn anisotropic_energy_varies_under_rotation() {
    // Negative control for the invariance property.
    let mut rng = SplitMix64::new(2718);
    let material = random_material(&mut rng);
    let st = random_strains(&mut rng);
    let mut max_change = 0.0_f64;
    for _ in 0..8 {
        let r = random_rotation(&mut rng);
        let rotated = StrainState {
            gamma: rotate(&st.gamma, &r, 1e-10).unwrap(),
            e: rotate(&st.e, &r, 1e-10).unwrap(),
            kappa: rotate(&st.kappa, &r, 1e-10).unwrap(),
        };
        max_change = max_change.max((energy(&material, &st) - energy(&material, &rotated)).abs());
    }
    assert!(max_change > 1e-3, "rotations only moved W by {max_change:e}");
}

#[test]
fn coupling_tensors_transmit_strain_across_stresses() {
    // With F alone, micro-curvature must show up in the force stress
    // and displacement strain in the couple stress, with one adjoint.
    let mut rng = SplitMix64::new(77);
    let f = micromorph_core::testkit::random_class_tensor(
        &mut rng,
        5,
        &micromorph_core::material::symmetry_spec_f(),
        0.3,
    );
    let zero4 = micromorph_core::material::TensorField::zero(4);
    let material = MaterialModel::anisotropic(
        zero4.clone(),
        zero4.clone(),
        micromorph_core::material::TensorField::zero(6),
        zero4,
        micromorph_core::material::TensorField::constant(f.clone()),
        micromorph_core::material::TensorField::zero(5),
    )
    .unwrap();
    let st = random_strains(&mut rng);
    let ss = stresses(&material.at([0.0; 3]), &st).unwrap();
    let t_expected = contract(&f, &st.kappa, &[(2, 0), (3, 1), (4, 2)]).unwrap();
    let m_expected = contract(&f, &st.gamma, &[(0, 0), (1, 1)]).unwrap();
    assert!(ss.t.sub(&t_expected).max_abs() <= 1e-14);
    assert!(ss.m.sub(&m_expected).max_abs() <= 1e-14);
    assert!(ss.s.max_abs() <= 1e-14);
}
