//! Constitutive model: the six material tensors A, B, C, E, F, G,
//! optionally position-dependent, with their symmetry classes enforced
//! at construction and exact spatial gradients.
//!
//! Index conventions (all zero-based slots):
//!   t_ij = A_ijkl gamma_kl + E_ijkl e_kl + F_ijklm kappa_klm
//!   s_ij = E_klij gamma_kl + B_ijkl e_kl + G_ijklm kappa_klm
//!   m_ijk = F_lmijk gamma_lm + G_lmijk e_lm + C_ijklmn kappa_lmn
//!
//! Enforced symmetries: A_ijkl = A_klij; B_ijkl = B_klij = B_jikl =
//! B_ijlk; C_ijklmn = C_lmnijk; E_ijkl = E_jikl AND E_ijkl = E_ijlk;
//! G_ijklm = G_jiklm; F unconstrained. The second-pair symmetry on E
//! goes beyond its stated class: it makes the micro-stress s symmetric
//! (s's free indices sit in E's last two slots) and costs no
//! generality, because that pair only ever contracts the symmetric e
//! in the t equation.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::expr::Expr;
use crate::math;
use crate::tensor::{
    check_symmetry, contract, isotropic_basis, symmetrize, SymmetryRelation, SymmetrySpec,
    Tensor, TensorError,
};

/// Tolerance above which constructor symmetrization is reported as a
/// warning: hand-entered data should be symmetric to rounding already.
pub const SYMMETRY_WARN_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("constitutive tensor {name} must have rank {want}, got {got}")]
    WrongRank {
        name: &'static str,
        want: usize,
        got: usize,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Position-dependent tensor: a sum of closed-form scalar modulations
/// times constant tensors. Gradients differentiate the modulations
/// exactly; the constant part never changes.
#[derive(Clone, Debug)]
pub struct TensorField {
    rank: usize,
    terms: Vec<FieldTerm>,
}

#[derive(Clone, Debug)]
struct FieldTerm {
    coeff: Expr,
    grad_coeff: [Expr; 3],
    tensor: Tensor,
}

impl TensorField {
    pub fn constant(tensor: Tensor) -> Self {
        Self::from_terms(vec![(Expr::one(), tensor)])
    }

    pub fn zero(rank: usize) -> Self {
        Self::constant(Tensor::zeros(rank))
    }

    /// Builds sum_p coeff_p(x) * tensor_p. All tensors must share a rank.
    pub fn from_terms(terms: Vec<(Expr, Tensor)>) -> Self {
        assert!(!terms.is_empty(), "a tensor field needs at least one term");
        let rank = terms[0].1.rank();
        let terms = terms
            .into_iter()
            .map(|(coeff, tensor)| {
                assert_eq!(tensor.rank(), rank, "mixed ranks in tensor field");
                let grad_coeff = [coeff.diff(0), coeff.diff(1), coeff.diff(2)];
                FieldTerm {
                    coeff,
                    grad_coeff,
                    tensor,
                }
            })
            .collect();
        Self { rank, terms }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> Vec<(Expr, Tensor)> {
        self.terms
            .iter()
            .map(|t| (t.coeff.clone(), t.tensor.clone()))
            .collect()
    }

    pub fn value(&self, x: [f64; 3]) -> Tensor {
        let mut acc = Tensor::zeros(self.rank);
        for term in &self.terms {
            acc.axpy(term.coeff.eval(x), &term.tensor);
        }
        acc
    }

    /// Spatial gradient, derivative slot appended LAST (rank r+1).
    pub fn gradient(&self, x: [f64; 3]) -> Tensor {
        let mut acc = Tensor::zeros(self.rank + 1);
        let n = crate::tensor::entry_count(self.rank);
        for term in &self.terms {
            for (k, g) in term.grad_coeff.iter().enumerate() {
                let gv = g.eval(x);
                if gv == 0.0 {
                    continue;
                }
                for off in 0..n {
                    acc.entries_mut()[off * 3 + k] += gv * term.tensor.entries()[off];
                }
            }
        }
        acc
    }

    /// True when every modulation is a constant expression.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.is_constant())
    }

    /// Applies `f` to every constant tensor, keeping modulations.
    fn map_tensors(
        &self,
        mut f: impl FnMut(&Tensor) -> Result<Tensor, TensorError>,
    ) -> Result<Self, TensorError> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(FieldTerm {
                    coeff: t.coeff.clone(),
                    grad_coeff: t.grad_coeff.clone(),
                    tensor: f(&t.tensor)?,
                })
            })
            .collect::<Result<Vec<_>, TensorError>>()?;
        Ok(Self {
            rank: self.rank,
            terms,
        })
    }
}

/// Symmetry class of each constitutive tensor.
pub fn symmetry_spec_a() -> SymmetrySpec {
    SymmetrySpec::new(4, vec![SymmetryRelation::BlockExchange(vec![0, 1], vec![2, 3])])
        .expect("static spec")
}

pub fn symmetry_spec_b() -> SymmetrySpec {
    SymmetrySpec::new(
        4,
        vec![
            SymmetryRelation::BlockExchange(vec![0, 1], vec![2, 3]),
            SymmetryRelation::PairExchange(0, 1),
            SymmetryRelation::PairExchange(2, 3),
        ],
    )
    .expect("static spec")
}

pub fn symmetry_spec_c() -> SymmetrySpec {
    SymmetrySpec::new(
        6,
        vec![SymmetryRelation::BlockExchange(vec![0, 1, 2], vec![3, 4, 5])],
    )
    .expect("static spec")
}

pub fn symmetry_spec_e() -> SymmetrySpec {
    SymmetrySpec::new(
        4,
        vec![
            SymmetryRelation::PairExchange(0, 1),
            SymmetryRelation::PairExchange(2, 3),
        ],
    )
    .expect("static spec")
}

pub fn symmetry_spec_f() -> SymmetrySpec {
    SymmetrySpec::new(5, vec![]).expect("static spec")
}

pub fn symmetry_spec_g() -> SymmetrySpec {
    SymmetrySpec::new(5, vec![SymmetryRelation::PairExchange(0, 1)]).expect("static spec")
}

/// The six constitutive tensors evaluated at one point.
#[derive(Clone, Debug)]
pub struct MaterialPoint {
    pub a: Tensor,
    pub b: Tensor,
    pub c: Tensor,
    pub e: Tensor,
    pub f: Tensor,
    pub g: Tensor,
}

/// Spatial gradients of the six tensors at one point, derivative slot
/// last (ranks 5, 5, 7, 5, 6, 6).
#[derive(Clone, Debug)]
pub struct MaterialGradients {
    pub a: Tensor,
    pub b: Tensor,
    pub c: Tensor,
    pub e: Tensor,
    pub f: Tensor,
    pub g: Tensor,
}

/// Immutable constitutive model. Constructors enforce the symmetry
/// classes, so every evaluation satisfies them by construction.
#[derive(Clone, Debug)]
pub struct MaterialModel {
    a: TensorField,
    b: TensorField,
    c: TensorField,
    e: TensorField,
    f: TensorField,
    g: TensorField,
    homogeneous: bool,
    isotropic: bool,
    symmetrization_warning: bool,
}

/// Isotropic coefficients: linear combinations over the Kronecker-delta
/// product bases (3 elements in rank 4, 15 in rank 6). The minor
/// symmetries of B and E collapse their second and third coefficients
/// to one effective value; C's major symmetry pairs up its basis
/// elements. No rank-5 delta basis exists, so F = G = 0: this models
/// strict (non-chiral) isotropy.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicSpec {
    pub coeff_a: [f64; 3],
    pub coeff_b: [f64; 3],
    pub coeff_c: [f64; 15],
    pub coeff_e: [f64; 3],
}

impl MaterialModel {
    /// Builds a model from six tensor fields (ranks 4, 4, 6, 4, 5, 5).
    /// Each term is symmetrized into its class; if that moved any entry
    /// by more than [`SYMMETRY_WARN_TOL`], the warning flag is set.
    pub fn anisotropic(
        a: TensorField,
        b: TensorField,
        c: TensorField,
        e: TensorField,
        f: TensorField,
        g: TensorField,
    ) -> Result<Self, MaterialError> {
        for (field, name, want) in [
            (&a, "A", 4),
            (&b, "B", 4),
            (&c, "C", 6),
            (&e, "E", 4),
            (&f, "F", 5),
            (&g, "G", 5),
        ] {
            if field.rank() != want {
                return Err(MaterialError::WrongRank {
                    name,
                    want,
                    got: field.rank(),
                });
            }
        }
        let mut warning = false;
        let mut fix = |field: &TensorField, spec: &SymmetrySpec| -> Result<TensorField, TensorError> {
            field.map_tensors(|t| {
                let s = symmetrize(t, spec)?;
                if s.sub(t).max_abs() > SYMMETRY_WARN_TOL {
                    warning = true;
                }
                Ok(s)
            })
        };
        let a = fix(&a, &symmetry_spec_a())?;
        let b = fix(&b, &symmetry_spec_b())?;
        let c = fix(&c, &symmetry_spec_c())?;
        let e = fix(&e, &symmetry_spec_e())?;
        let f = fix(&f, &symmetry_spec_f())?;
        let g = fix(&g, &symmetry_spec_g())?;
        let homogeneous = [&a, &b, &c, &e, &f, &g].iter().all(|t| t.is_constant());
        Ok(Self {
            a,
            b,
            c,
            e,
            f,
            g,
            homogeneous,
            isotropic: false,
            symmetrization_warning: warning,
        })
    }

    /// Isotropic model from delta-basis coefficients; F = G = 0.
    pub fn isotropic(spec: &IsotropicSpec) -> Self {
        let basis4 = isotropic_basis(4).expect("rank-4 basis exists");
        let basis6 = isotropic_basis(6).expect("rank-6 basis exists");
        let combine4 = |coeff: &[f64; 3]| {
            let mut acc = Tensor::zeros(4);
            for (c, b) in coeff.iter().zip(&basis4) {
                acc.axpy(*c, b);
            }
            acc
        };
        let mut c6 = Tensor::zeros(6);
        for (cv, b) in spec.coeff_c.iter().zip(&basis6) {
            c6.axpy(*cv, b);
        }
        let a = symmetrize(&combine4(&spec.coeff_a), &symmetry_spec_a()).expect("rank matches");
        let b = symmetrize(&combine4(&spec.coeff_b), &symmetry_spec_b()).expect("rank matches");
        let e = symmetrize(&combine4(&spec.coeff_e), &symmetry_spec_e()).expect("rank matches");
        let c = symmetrize(&c6, &symmetry_spec_c()).expect("rank matches");
        Self {
            a: TensorField::constant(a),
            b: TensorField::constant(b),
            c: TensorField::constant(c),
            e: TensorField::constant(e),
            f: TensorField::zero(5),
            g: TensorField::zero(5),
            homogeneous: true,
            isotropic: true,
            symmetrization_warning: false,
        }
    }

    /// Replaces each tensor's modulation by `mods` (same tensors). Used
    /// to turn a homogeneous model inhomogeneous with scalar factors.
    pub fn with_modulations(
        &self,
        mods: [Expr; 6],
    ) -> Self {
        let scale = |field: &TensorField, m: &Expr| {
            TensorField::from_terms(
                field
                    .terms
                    .iter()
                    .map(|t| (m.mul(&t.coeff), t.tensor.clone()))
                    .collect(),
            )
        };
        let a = scale(&self.a, &mods[0]);
        let b = scale(&self.b, &mods[1]);
        let c = scale(&self.c, &mods[2]);
        let e = scale(&self.e, &mods[3]);
        let f = scale(&self.f, &mods[4]);
        let g = scale(&self.g, &mods[5]);
        let homogeneous = [&a, &b, &c, &e, &f, &g].iter().all(|t| t.is_constant());
        Self {
            a,
            b,
            c,
            e,
            f,
            g,
            homogeneous,
            isotropic: self.isotropic,
            symmetrization_warning: self.symmetrization_warning,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// True only for models built by [`MaterialModel::isotropic`]
    /// (scalar modulations preserve it). A structural claim: anisotropic
    /// construction returns false even if the entries happen to be
    /// isotropic.
    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    pub fn symmetrization_warning(&self) -> bool {
        self.symmetrization_warning
    }

    pub fn fields(&self) -> [&TensorField; 6] {
        [&self.a, &self.b, &self.c, &self.e, &self.f, &self.g]
    }

    pub fn at(&self, x: [f64; 3]) -> MaterialPoint {
        MaterialPoint {
            a: self.a.value(x),
            b: self.b.value(x),
            c: self.c.value(x),
            e: self.e.value(x),
            f: self.f.value(x),
            g: self.g.value(x),
        }
    }

    /// Analytic spatial gradients at `x`, derivative slot last.
    pub fn gradients_at(&self, x: [f64; 3]) -> MaterialGradients {
        MaterialGradients {
            a: self.a.gradient(x),
            b: self.b.gradient(x),
            c: self.c.gradient(x),
            e: self.e.gradient(x),
            f: self.f.gradient(x),
            g: self.g.gradient(x),
        }
    }

    /// True if all six tensors satisfy their symmetry classes at `x`.
    pub fn check_symmetries(&self, x: [f64; 3], tol: f64) -> bool {
        check_symmetry(&self.a.value(x), &symmetry_spec_a(), tol)
            && check_symmetry(&self.b.value(x), &symmetry_spec_b(), tol)
            && check_symmetry(&self.c.value(x), &symmetry_spec_c(), tol)
            && check_symmetry(&self.e.value(x), &symmetry_spec_e(), tol)
            && check_symmetry(&self.g.value(x), &symmetry_spec_g(), tol)
    }

    /// Smallest eigenvalue of the quadratic energy form at `x`, over the
    /// 45-dimensional strain space (gamma 9, e 9, kappa 27). Diagnostic
    /// only: the balance laws hold regardless of definiteness.
    pub fn stability_indicator(&self, x: [f64; 3]) -> f64 {
        let p = self.at(x);
        // Hessian blocks of W in (gamma, e, kappa) coordinates:
        // [ sym(A)  E      F    ]
        // [ E^T     B      G    ]
        // [ F^T     G^T    sym(C) ]
        let asym = p
            .a
            .add(&p.a.permute_slots(&[2, 3, 0, 1]))
            .scale(0.5);
        let csym = p
            .c
            .add(&p.c.permute_slots(&[3, 4, 5, 0, 1, 2]))
            .scale(0.5);
        let mut h = vec![[0.0f64; 45]; 45];
        let gamma_off = 0;
        let e_off = 9;
        let kappa_off = 18;
        let pair = |i: usize| [i / 3, i % 3];
        let triple = |i: usize| [i / 9, (i / 3) % 3, i % 3];
        for r in 0..9 {
            let [i, j] = pair(r);
            for cidx in 0..9 {
                let [k, l] = pair(cidx);
                h[gamma_off + r][gamma_off + cidx] = asym.get(&[i, j, k, l]);
                h[gamma_off + r][e_off + cidx] = p.e.get(&[i, j, k, l]);
                h[e_off + r][gamma_off + cidx] = p.e.get(&[k, l, i, j]);
                h[e_off + r][e_off + cidx] = p.b.get(&[i, j, k, l]);
            }
            for cidx in 0..27 {
                let [k, l, m] = triple(cidx);
                h[gamma_off + r][kappa_off + cidx] = p.f.get(&[i, j, k, l, m]);
                h[kappa_off + cidx][gamma_off + r] = p.f.get(&[i, j, k, l, m]);
                h[e_off + r][kappa_off + cidx] = p.g.get(&[i, j, k, l, m]);
                h[kappa_off + cidx][e_off + r] = p.g.get(&[i, j, k, l, m]);
            }
        }
        for r in 0..27 {
            let [i, j, k] = triple(r);
            for cidx in 0..27 {
                let [l, m, n] = triple(cidx);
                h[kappa_off + r][kappa_off + cidx] = csym.get(&[i, j, k, l, m, n]);
            }
        }
        smallest_eigenvalue_symmetric(&mut h)
    }
}

/// Cyclic Jacobi iteration; the matrix must be symmetric. Destroys the
/// input. Adequate for the 45x45 diagnostic; not a general solver.
fn smallest_eigenvalue_symmetric(h: &mut [[f64; 45]]) -> f64 {
    let n = h.len();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += h[p][q] * h[p][q];
            }
        }
        if off <= 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = h[p][q];
                if math::abs(apq) < 1e-300 {
                    continue;
                }
                let theta = (h[q][q] - h[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let hkp = h[k][p];
                    let hkq = h[k][q];
                    h[k][p] = c * hkp - s * hkq;
                    h[k][q] = s * hkp + c * hkq;
                }
                for k in 0..n {
                    let hpk = h[p][k];
                    let hqk = h[q][k];
                    h[p][k] = c * hpk - s * hqk;
                    h[q][k] = s * hpk + c * hqk;
                }
            }
        }
    }
    let mut min = h[0][0];
    for k in 1..n {
        min = if h[k][k] < min { h[k][k] } else { min };
    }
    min
}

/// Scalar contraction helpers used by the energy and by the
/// inhomogeneity force; kept here so material-gradient contractions
/// live next to the tensors they contract.
pub fn quad_form(t4: &Tensor, left: &Tensor, right: &Tensor) -> f64 {
    // left_ij T_ijkl right_kl
    let half = contract(t4, right, &[(2, 0), (3, 1)]).expect("rank 4 against rank 2");
    half.inner(left)
}
