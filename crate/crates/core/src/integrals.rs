//! Quadrature over closed surfaces and volumes, and the three
//! configurational integrals evaluated through two independent routes:
//!   J_k = integral_S P_ki n_i dS   = -integral_V f^inh_k dV
//!   L_k = integral_S M_ki n_i dS   =  integral_V rotational source dV
//!   M   = integral_S Y_i n_i dS    =  integral_V scaling source dV
//! The surface route sees only flux values; the volume route sees only
//! source densities. Their agreement is the divergence-theorem
//! self-check that validates the whole chain.
//!
//! Summation order is fixed (faces, then nodes in index order), so
//! equal inputs give bitwise equal results.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::currents::{PointEvaluation, ScalingDims};
use crate::fields::{Domain, FieldSet};
use crate::kinetics::{EnergyConvention, KineticsError};
use crate::material::MaterialModel;
use crate::math;
use crate::tensor::Tensor;

pub const DEFAULT_ORDER: usize = 8;
pub const PI: f64 = core::f64::consts::PI;

#[derive(Debug, Error, PartialEq)]
pub enum IntegralError {
    #[error("quadrature order {got} too low; need at least 2")]
    OrderTooLow { got: usize },
    #[error("integration geometry must lie strictly inside the field domain")]
    GeometryOutsideDomain,
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact for polynomials
/// of degree 2n-1. Nodes ascend; the set is exactly symmetric because
/// only one half is solved and the other mirrored.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // i-th root counting from the largest; Newton from the
        // Chebyshev-like estimate
        let mut x = math::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if math::abs(step) <= 1e-15 {
                let (_, d2) = legendre_with_derivative(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let mid = n / 2;
        nodes[mid] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[mid] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = if math::abs(x) < 1.0 {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    } else {
        // at the endpoints P'_n = n(n+1)/2 * (+-1)^(n+1); never hit by
        // interior Gauss nodes, kept for robustness
        let sign = if x > 0.0 { 1.0 } else { powm1(n + 1) };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p1, d)
}

fn powm1(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// True when `inner` lies strictly inside `outer` (positive clearance
/// everywhere): integration geometry may not touch the field boundary.
pub fn strictly_inside(inner: &Domain, outer: &Domain) -> bool {
    match (inner, outer) {
        (Domain::Box { min: a, max: b }, Domain::Box { min, max }) => {
            (0..3).all(|d| min[d] < a[d] && b[d] < max[d])
        }
        (Domain::Ball { center, radius }, Domain::Box { min, max }) => {
            (0..3).all(|d| min[d] < center[d] - radius && center[d] + radius < max[d])
        }
        (Domain::Box { min: a, max: b }, Domain::Ball { center, radius }) => {
            let mut ok = true;
            for corner in 0..8 {
                let mut d2 = 0.0;
                for d in 0..3 {
                    let c = if corner >> d & 1 == 0 { a[d] } else { b[d] };
                    d2 += (c - center[d]) * (c - center[d]);
                }
                ok &= math::sqrt(d2) < *radius;
            }
            ok
        }
        (
            Domain::Ball { center: c, radius: r },
            Domain::Ball { center, radius },
        ) => {
            let mut d2 = 0.0;
            for d in 0..3 {
                d2 += (c[d] - center[d]) * (c[d] - center[d]);
            }
            math::sqrt(d2) + r < *radius
        }
    }
}

/// Closed integration geometry with per-direction Gauss orders.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    geometry: Domain,
    surface_order: usize,
    volume_order: usize,
}

impl QuadratureRule {
    pub fn new(
        geometry: Domain,
        surface_order: usize,
        volume_order: usize,
    ) -> Result<Self, IntegralError> {
        for got in [surface_order, volume_order] {
            if got < 2 {
                return Err(IntegralError::OrderTooLow { got });
            }
        }
        Ok(Self {
            geometry,
            surface_order,
            volume_order,
        })
    }

    pub fn with_default_orders(geometry: Domain) -> Self {
        Self::new(geometry, DEFAULT_ORDER, DEFAULT_ORDER).expect("default orders are valid")
    }

    pub fn geometry(&self) -> &Domain {
        &self.geometry
    }

    pub fn surface_order(&self) -> usize {
        self.surface_order
    }

    pub fn volume_order(&self) -> usize {
        self.volume_order
    }

    pub fn with_surface_order(&self, surface_order: usize) -> Result<Self, IntegralError> {
        Self::new(self.geometry.clone(), surface_order, self.volume_order)
    }

    /// Errors unless the rule's geometry lies strictly inside `domain`,
    /// the precondition of every integral below.
    pub fn require_inside(&self, domain: &Domain) -> Result<(), IntegralError> {
        if strictly_inside(&self.geometry, domain) {
            Ok(())
        } else {
            Err(IntegralError::GeometryOutsideDomain)
        }
    }
}

/// Flux integral over the closed boundary of the rule's geometry:
/// contracts the LAST slot of `flux` with the outward normal, so a
/// rank-r integrand yields a rank-(r-1) result.
pub fn surface_integral(flux: &dyn Fn([f64; 3]) -> Tensor, rule: &QuadratureRule) -> Tensor {
    match &rule.geometry {
        Domain::Box { min, max } => box_surface(flux, min, max, rule.surface_order),
        Domain::Ball { center, radius } => {
            ball_surface(flux, *center, *radius, rule.surface_order)
        }
    }
}

fn contract_normal(t: &Tensor, normal: [f64; 3]) -> Tensor {
    let r = t.rank();
    assert!(r >= 1, "flux must have at least the normal slot");
    crate::tensor::contract(t, &Tensor::vector(normal), &[(r - 1, 0)])
        .expect("normal contraction")
}

fn box_surface(
    flux: &dyn Fn([f64; 3]) -> Tensor,
    min: &[f64; 3],
    max: &[f64; 3],
    order: usize,
) -> Tensor {
    let (nodes, weights) = gauss_legendre(order);
    let mut out: Option<Tensor> = None;
    for d in 0..3 {
        let (a, b) = ((d + 1) % 3, (d + 2) % 3);
        let (ja, jb) = ((max[a] - min[a]) / 2.0, (max[b] - min[b]) / 2.0);
        for (side, x_d, sign) in [(0usize, min[d], -1.0), (1, max[d], 1.0)] {
            let _ = side;
            let mut normal = [0.0; 3];
            normal[d] = sign;
            for (ia, &xi_a) in nodes.iter().enumerate() {
                let xa = (min[a] + max[a]) / 2.0 + ja * xi_a;
                for (ib, &xi_b) in nodes.iter().enumerate() {
                    let xb = (min[b] + max[b]) / 2.0 + jb * xi_b;
                    let mut x = [0.0; 3];
                    x[d] = x_d;
                    x[a] = xa;
                    x[b] = xb;
                    let w = weights[ia] * weights[ib] * ja * jb;
                    let contrib = contract_normal(&flux(x), normal).scale(w);
                    out = Some(match out {
                        None => contrib,
                        Some(acc) => acc.add(&contrib),
                    });
                }
            }
        }
    }
    out.expect("order >= 2 guarantees nodes")
}

/// Unit directions and weights for the sphere: Gauss points in
/// cos(theta) crossed with a uniform 2*order-point grid in phi (the
/// trapezoid rule on a periodic smooth integrand, spectrally exact for
/// the trigonometric polynomials quadrature meets here).
fn sphere_directions(order: usize) -> Vec<([f64; 3], f64)> {
    let (nodes, weights) = gauss_legendre(order);
    let nphi = 2 * order;
    let wphi = 2.0 * PI / nphi as f64;
    let mut dirs = Vec::with_capacity(order * nphi);
    for (i, &c) in nodes.iter().enumerate() {
        let s = math::sqrt(1.0 - c * c);
        for j in 0..nphi {
            let phi = wphi * j as f64;
            let dir = [s * math::cos(phi), s * math::sin(phi), c];
            dirs.push((dir, weights[i] * wphi));
        }
    }
    dirs
}

fn ball_surface(
    flux: &dyn Fn([f64; 3]) -> Tensor,
    center: [f64; 3],
    radius: f64,
    order: usize,
) -> Tensor {
    let mut out: Option<Tensor> = None;
    for (dir, w) in sphere_directions(order) {
        let x = [
            center[0] + radius * dir[0],
            center[1] + radius * dir[1],
            center[2] + radius * dir[2],
        ];
        let contrib = contract_normal(&flux(x), dir).scale(w * radius * radius);
        out = Some(match out {
            None => contrib,
            Some(acc) => acc.add(&contrib),
        });
    }
    out.expect("order >= 2 guarantees directions")
}

/// Volume integral over the rule's geometry; tensor-product Gauss for
/// the box, radial Gauss times the sphere rule for the ball.
pub fn volume_integral(density: &dyn Fn([f64; 3]) -> Tensor, rule: &QuadratureRule) -> Tensor {
    match &rule.geometry {
        Domain::Box { min, max } => box_volume(density, min, max, rule.volume_order),
        Domain::Ball { center, radius } => {
            ball_volume(density, *center, *radius, rule.volume_order)
        }
    }
}

fn box_volume(
    density: &dyn Fn([f64; 3]) -> Tensor,
    min: &[f64; 3],
    max: &[f64; 3],
    order: usize,
) -> Tensor {
    let (nodes, weights) = gauss_legendre(order);
    let half = [
        (max[0] - min[0]) / 2.0,
        (max[1] - min[1]) / 2.0,
        (max[2] - min[2]) / 2.0,
    ];
    let mid = [
        (max[0] + min[0]) / 2.0,
        (max[1] + min[1]) / 2.0,
        (max[2] + min[2]) / 2.0,
    ];
    let jac = half[0] * half[1] * half[2];
    let mut out: Option<Tensor> = None;
    for (i, &xi) in nodes.iter().enumerate() {
        for (j, &yj) in nodes.iter().enumerate() {
            for (k, &zk) in nodes.iter().enumerate() {
                let x = [mid[0] + half[0] * xi, mid[1] + half[1] * yj, mid[2] + half[2] * zk];
                let w = weights[i] * weights[j] * weights[k] * jac;
                let contrib = density(x).scale(w);
                out = Some(match out {
                    None => contrib,
                    Some(acc) => acc.add(&contrib),
                });
            }
        }
    }
    out.expect("order >= 2 guarantees nodes")
}

fn ball_volume(
    density: &dyn Fn([f64; 3]) -> Tensor,
    center: [f64; 3],
    radius: f64,
    order: usize,
) -> Tensor {
    let (nodes, weights) = gauss_legendre(order);
    let dirs = sphere_directions(order);
    let mut out: Option<Tensor> = None;
    for (i, &xi) in nodes.iter().enumerate() {
        // map [-1,1] -> [0, R]
        let r = radius * (xi + 1.0) / 2.0;
        let wr = weights[i] * radius / 2.0 * r * r;
        for (dir, wd) in &dirs {
            let x = [
                center[0] + r * dir[0],
                center[1] + r * dir[1],
                center[2] + r * dir[2],
            ];
            let contrib = density(x).scale(wr * wd);
            out = Some(match out {
                None => contrib,
                Some(acc) => acc.add(&contrib),
            });
        }
    }
    out.expect("order >= 2 guarantees nodes")
}

/// Translational integral: surface flux of the Eshelby stress vs the
/// negated volume integral of the inhomogeneity force.
pub fn j_integral(
    fields: &FieldSet,
    material: &MaterialModel,
    convention: EnergyConvention,
    rule: &QuadratureRule,
) -> Result<(Tensor, Tensor), IntegralError> {
    rule.require_inside(fields.domain())?;
    let surface = surface_integral(
        &|x| {
            PointEvaluation::new(fields, material, x, convention)
                .expect("geometry checked inside domain")
                .eshelby_stress()
        },
        rule,
    );
    let volume = volume_integral(
        &|x| {
            PointEvaluation::new(fields, material, x, convention)
                .expect("geometry checked inside domain")
                .inhomogeneity_force()
        },
        rule,
    )
    .scale(-1.0);
    Ok((surface, volume))
}

/// Rotational integral: surface flux of the total angular momentum vs
/// the volume integral of the rotational source.
pub fn l_integral(
    fields: &FieldSet,
    material: &MaterialModel,
    convention: EnergyConvention,
    rule: &QuadratureRule,
) -> Result<(Tensor, Tensor), IntegralError> {
    rule.require_inside(fields.domain())?;
    let surface = surface_integral(
        &|x| {
            PointEvaluation::new(fields, material, x, convention)
                .expect("geometry checked inside domain")
                .angular_momentum()
                .0
        },
        rule,
    );
    let volume = volume_integral(
        &|x| {
            PointEvaluation::new(fields, material, x, convention)
                .expect("geometry checked inside domain")
                .rotational_source()
                .total()
        },
        rule,
    );
    Ok((surface, volume))
}

/// Scaling integral: surface flux of Y vs the volume integral of the
/// scaling source.
pub fn m_integral(
    fields: &FieldSet,
    material: &MaterialModel,
    convention: EnergyConvention,
    rule: &QuadratureRule,
    dims: ScalingDims,
) -> Result<(f64, f64), IntegralError> {
    rule.require_inside(fields.domain())?;
    let surface = surface_integral(
        &|x| {
            PointEvaluation::new(fields, material, x, convention)
                .expect("geometry checked inside domain")
                .scaling_flux(dims)
        },
        rule,
    )
    .as_scalar();
    let volume = volume_integral(
        &|x| {
            Tensor::scalar(
                PointEvaluation::new(fields, material, x, convention)
                    .expect("geometry checked inside domain")
                    .scaling_source(dims),
            )
        },
        rule,
    )
    .as_scalar();
    Ok((surface, volume))
}

/// Relative surface/volume disagreement, floored so conserved (near
/// zero) integrals are judged on an absolute scale:
/// d = |s - v|_inf / max(|s|_inf, |v|_inf, 1).
pub fn discrepancy(surface: &Tensor, volume: &Tensor) -> f64 {
    let diff = surface.sub(volume).max_abs();
    diff / math::max(surface.max_abs(), math::max(volume.max_abs(), 1.0))
}

/// All three integrals, their discrepancies, and the surface-order
/// refinement deltas (value change when the surface order doubles).
#[derive(Clone, Debug)]
pub struct IntegralReport {
    pub j_surface: Tensor,
    pub j_volume: Tensor,
    pub l_surface: Tensor,
    pub l_volume: Tensor,
    pub m_surface: f64,
    pub m_volume: f64,
    pub j_discrepancy: f64,
    pub l_discrepancy: f64,
    pub m_discrepancy: f64,
    pub j_refinement_delta: f64,
    pub l_refinement_delta: f64,
    pub m_refinement_delta: f64,
    pub surface_order: usize,
    pub volume_order: usize,
}

pub fn integral_report(
    fields: &FieldSet,
    material: &MaterialModel,
    convention: EnergyConvention,
    rule: &QuadratureRule,
    dims: ScalingDims,
) -> Result<IntegralReport, IntegralError> {
    let (j_surface, j_volume) = j_integral(fields, material, convention, rule)?;
    let (l_surface, l_volume) = l_integral(fields, material, convention, rule)?;
    let (m_surface, m_volume) = m_integral(fields, material, convention, rule, dims)?;
    let fine = rule.with_surface_order(rule.surface_order * 2)?;
    let (j_fine, _) = j_integral(fields, material, convention, &fine)?;
    let (l_fine, _) = l_integral(fields, material, convention, &fine)?;
    let (m_fine, _) = m_integral(fields, material, convention, &fine, dims)?;
    Ok(IntegralReport {
        j_discrepancy: discrepancy(&j_surface, &j_volume),
        l_discrepancy: discrepancy(&l_surface, &l_volume),
        m_discrepancy: discrepancy(&Tensor::scalar(m_surface), &Tensor::scalar(m_volume)),
        j_refinement_delta: j_fine.sub(&j_surface).max_abs(),
        l_refinement_delta: l_fine.sub(&l_surface).max_abs(),
        m_refinement_delta: math::abs(m_fine - m_surface),
        j_surface,
        j_volume,
        l_surface,
        l_volume,
        m_surface,
        m_volume,
        surface_order: rule.surface_order,
        volume_order: rule.volume_order,
    })
}
