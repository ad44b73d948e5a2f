//! Spatial domains, closed-form field sets, jets, and derivative
//! operators along a field configuration.
//!
//! A [`FieldSet`] carries displacement u (3 components), micro-distortion
//! phi (9), body force (3), and body couple (9) as expression trees, and
//! precomputes every first and second derivative tree at construction so
//! jet evaluation is pure arithmetic. Derivative slots are always
//! appended after the base slots, and divergences contract the LAST slot;
//! both conventions hold throughout the crate.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::expr::Expr;
use crate::math;
use crate::tensor::Tensor;

/// Region of three-dimensional space on which fields are defined.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Axis-aligned box `[min_i, max_i]` in each coordinate.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Closed ball of the given radius.
    Ball { center: [f64; 3], radius: f64 },
}

impl Domain {
    pub fn unit_box() -> Self {
        Domain::Box {
            min: [-1.0, -1.0, -1.0],
            max: [1.0, 1.0, 1.0],
        }
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        match self {
            Domain::Box { min, max } => (0..3).all(|i| x[i] >= min[i] && x[i] <= max[i]),
            Domain::Ball { center, radius } => {
                math::hypot3(x[0] - center[0], x[1] - center[1], x[2] - center[2]) <= *radius
            }
        }
    }

    /// The domain pulled inward by `margin` on every side. Panics if the
    /// result would be empty; interior sampling margins are small.
    pub fn shrink(&self, margin: f64) -> Self {
        match self {
            Domain::Box { min, max } => {
                let smin = [min[0] + margin, min[1] + margin, min[2] + margin];
                let smax = [max[0] - margin, max[1] - margin, max[2] - margin];
                assert!(
                    (0..3).all(|i| smin[i] < smax[i]),
                    "margin {margin} empties the box"
                );
                Domain::Box { min: smin, max: smax }
            }
            Domain::Ball { center, radius } => {
                let r = radius - margin;
                assert!(r > 0.0, "margin {margin} empties the ball");
                Domain::Ball { center: *center, radius: r }
            }
        }
    }

    /// Smallest axis-aligned box containing the domain.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            Domain::Box { min, max } => (*min, *max),
            Domain::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            ),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("point ({0}, {1}, {2}) lies outside the field domain")]
    OutsideDomain(f64, f64, f64),
    #[error("expression for {component} is not finite at ({x}, {y}, {z})")]
    NonFinite {
        component: String,
        x: f64,
        y: f64,
        z: f64,
    },
    #[error("finite-difference step {0:e} underflows at this point")]
    StepUnderflow(f64),
}

/// Value, gradient, and hessian of one tensor field at a point. The
/// gradient appends one slot, the hessian two; the hessian is symmetric
/// in its two derivative slots because partial derivatives commute.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: Tensor,
    pub gradient: Tensor,
    pub hessian: Tensor,
}

/// Value and gradient of a source field (body force or couple). The
/// theory never differentiates sources twice, so no hessian is carried.
#[derive(Clone, Debug)]
pub struct SourceJet {
    pub value: Tensor,
    pub gradient: Tensor,
}

/// Jets of all four fields at one point.
#[derive(Clone, Debug)]
pub struct JetBundle {
    pub x: [f64; 3],
    pub u: Jet,
    pub phi: Jet,
    pub body_force: SourceJet,
    pub body_couple: SourceJet,
}

/// One scalar component with its precomputed derivative trees.
#[derive(Clone, Debug)]
struct Component {
    value: Expr,
    grad: [Expr; 3],
    hess: [[Expr; 3]; 3],
}

impl Component {
    fn new(value: Expr) -> Self {
        let grad = [value.diff(0), value.diff(1), value.diff(2)];
        let hess = [
            [grad[0].diff(0), grad[0].diff(1), grad[0].diff(2)],
            [grad[1].diff(0), grad[1].diff(1), grad[1].diff(2)],
            [grad[2].diff(0), grad[2].diff(1), grad[2].diff(2)],
        ];
        Self { value, grad, hess }
    }
}

/// Closed-form field configuration on a domain.
///
/// `u` is indexed by alpha; `phi`, `body_couple` by (alpha, beta) in
/// row-major order, i.e. `phi[3*alpha + beta]` holds phi_{alpha beta}.
#[derive(Clone, Debug)]
pub struct FieldSet {
    domain: Domain,
    u: Vec<Component>,
    phi: Vec<Component>,
    body_force: Vec<Component>,
    body_couple: Vec<Component>,
}

impl FieldSet {
    /// Builds the field set and precomputes all derivative trees.
    /// Every expression is checked for finiteness on a 5x5x5 grid
    /// spanning the domain's bounding box (clipped to the domain).
    pub fn new(
        u: [Expr; 3],
        phi: [Expr; 9],
        body_force: [Expr; 3],
        body_couple: [Expr; 9],
        domain: Domain,
    ) -> Result<Self, FieldError> {
        let fs = Self {
            domain,
            u: u.iter().cloned().map(Component::new).collect(),
            phi: phi.iter().cloned().map(Component::new).collect(),
            body_force: body_force.iter().cloned().map(Component::new).collect(),
            body_couple: body_couple.iter().cloned().map(Component::new).collect(),
        };
        fs.check_finite()?;
        Ok(fs)
    }

    /// Source-free configuration.
    pub fn without_sources(
        u: [Expr; 3],
        phi: [Expr; 9],
        domain: Domain,
    ) -> Result<Self, FieldError> {
        let z = || Expr::zero();
        Self::new(
            u,
            phi,
            [z(), z(), z()],
            [z(), z(), z(), z(), z(), z(), z(), z(), z()],
            domain,
        )
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn u_exprs(&self) -> [Expr; 3] {
        [
            self.u[0].value.clone(),
            self.u[1].value.clone(),
            self.u[2].value.clone(),
        ]
    }

    pub fn phi_exprs(&self) -> Vec<Expr> {
        self.phi.iter().map(|c| c.value.clone()).collect()
    }

    pub fn body_force_exprs(&self) -> Vec<Expr> {
        self.body_force.iter().map(|c| c.value.clone()).collect()
    }

    pub fn body_couple_exprs(&self) -> Vec<Expr> {
        self.body_couple.iter().map(|c| c.value.clone()).collect()
    }

    fn check_finite(&self) -> Result<(), FieldError> {
        let (min, max) = self.domain.bounding_box();
        let groups: [(&str, &[Component]); 4] = [
            ("u", &self.u),
            ("phi", &self.phi),
            ("body force", &self.body_force),
            ("body couple", &self.body_couple),
        ];
        for gi in 0..5 {
            for gj in 0..5 {
                for gk in 0..5 {
                    let x = [
                        min[0] + (max[0] - min[0]) * gi as f64 / 4.0,
                        min[1] + (max[1] - min[1]) * gj as f64 / 4.0,
                        min[2] + (max[2] - min[2]) * gk as f64 / 4.0,
                    ];
                    if !self.domain.contains(x) {
                        continue;
                    }
                    for (name, comps) in groups.iter() {
                        for (n, c) in comps.iter().enumerate() {
                            let mut probe = c.value.eval(x);
                            for g in &c.grad {
                                probe += g.eval(x);
                            }
                            for row in &c.hess {
                                for h in row {
                                    probe += h.eval(x);
                                }
                            }
                            if !probe.is_finite() {
                                return Err(FieldError::NonFinite {
                                    component: alloc::format!("{name}[{n}]"),
                                    x: x[0],
                                    y: x[1],
                                    z: x[2],
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn jet(&self, comps: &[Component], base_rank: usize, x: [f64; 3]) -> Jet {
        let count = comps.len();
        let mut value = Tensor::zeros(base_rank);
        let mut gradient = Tensor::zeros(base_rank + 1);
        let mut hessian = Tensor::zeros(base_rank + 2);
        for (n, c) in comps.iter().enumerate() {
            value.entries_mut()[n] = c.value.eval(x);
            for i in 0..3 {
                gradient.entries_mut()[n * 3 + i] = c.grad[i].eval(x);
                for j in 0..3 {
                    hessian.entries_mut()[n * 9 + i * 3 + j] = c.hess[i][j].eval(x);
                }
            }
        }
        debug_assert_eq!(count, value.entries().len());
        Jet {
            value,
            gradient,
            hessian,
        }
    }

    fn source_jet(&self, comps: &[Component], base_rank: usize, x: [f64; 3]) -> SourceJet {
        let mut value = Tensor::zeros(base_rank);
        let mut gradient = Tensor::zeros(base_rank + 1);
        for (n, c) in comps.iter().enumerate() {
            value.entries_mut()[n] = c.value.eval(x);
            for i in 0..3 {
                gradient.entries_mut()[n * 3 + i] = c.grad[i].eval(x);
            }
        }
        SourceJet { value, gradient }
    }

    /// Evaluates all jets at `x`. Errors if `x` is outside the domain.
    pub fn evaluate_jet(&self, x: [f64; 3]) -> Result<JetBundle, FieldError> {
        if !self.domain.contains(x) {
            return Err(FieldError::OutsideDomain(x[0], x[1], x[2]));
        }
        Ok(JetBundle {
            x,
            u: self.jet(&self.u, 1, x),
            phi: self.jet(&self.phi, 2, x),
            body_force: self.source_jet(&self.body_force, 1, x),
            body_couple: self.source_jet(&self.body_couple, 2, x),
        })
    }
}

/// Field data a point-function may depend on: the sample point and the
/// u, phi jets there. Sources enter point-functions only through their
/// explicit x-dependence, which lives in [`SamplePartials::wrt_x`].
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub x: [f64; 3],
    pub u: Jet,
    pub phi: Jet,
}

impl FieldSample {
    pub fn from_bundle(b: &JetBundle) -> Self {
        Self {
            x: b.x,
            u: b.u.clone(),
            phi: b.phi.clone(),
        }
    }
}

/// Partial derivatives of a tensor-valued point-function
/// g(x, u, phi, grad u, grad phi) of rank r, with the argument slots
/// appended after g's own slots:
/// wrt_x is rank r+1 (x_i last), wrt_u rank r+1 (alpha last),
/// wrt_phi rank r+2, wrt_grad_u rank r+2 (alpha, i), wrt_grad_phi
/// rank r+3 (alpha, beta, i).
#[derive(Clone, Debug)]
pub struct SamplePartials {
    pub rank: usize,
    pub wrt_x: Tensor,
    pub wrt_u: Tensor,
    pub wrt_phi: Tensor,
    pub wrt_grad_u: Tensor,
    pub wrt_grad_phi: Tensor,
}

/// Total derivative D_i g along the field configuration, from analytic
/// partials: the explicit x-derivative plus chain-rule terms through
/// u, phi and their gradients. Returns rank r+1 with the derivative
/// slot last.
pub fn total_derivative(partials: &SamplePartials, sample: &FieldSample) -> Tensor {
    let r = partials.rank;
    use crate::tensor::contract;
    // d g / d x_i  (explicit)
    let mut out = partials.wrt_x.clone();
    // + dg/du_a * u_{a,i}
    out = out.add(
        &contract(&partials.wrt_u, &sample.u.gradient, &[(r, 0)]).expect("rank bookkeeping"),
    );
    // + dg/dphi_ab * phi_{ab,i}
    out = out.add(
        &contract(&partials.wrt_phi, &sample.phi.gradient, &[(r, 0), (r + 1, 1)])
            .expect("rank bookkeeping"),
    );
    // + dg/du_{a,j} * u_{a,ji}
    out = out.add(
        &contract(&partials.wrt_grad_u, &sample.u.hessian, &[(r, 0), (r + 1, 1)])
            .expect("rank bookkeeping"),
    );
    // + dg/dphi_{ab,j} * phi_{ab,ji}
    out = out.add(
        &contract(
            &partials.wrt_grad_phi,
            &sample.phi.hessian,
            &[(r, 0), (r + 1, 1), (r + 2, 2)],
        )
        .expect("rank bookkeeping"),
    );
    out
}

/// Point-function for derivative fallbacks: a closure from position to
/// tensor, used when no analytic partials are available.
pub type PointFn<'a> = &'a dyn Fn([f64; 3]) -> Tensor;

/// Central-difference total derivative of an opaque point-function
/// (the pullback x -> g(x, fields(x)) is differentiated numerically).
/// Returns rank r+1 with the derivative slot last. Errors if the step
/// underflows at this point.
pub fn total_derivative_fd(g: PointFn, x: [f64; 3], h: f64) -> Result<Tensor, FieldError> {
    for i in 0..3 {
        if x[i] + h == x[i] || x[i] - h == x[i] {
            return Err(FieldError::StepUnderflow(h));
        }
    }
    let base = g(x);
    let r = base.rank();
    let mut out = Tensor::zeros(r + 1);
    for i in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        let diff = g(xp).sub(&g(xm)).scale(1.0 / (2.0 * h));
        let mut idx = [0usize; crate::tensor::MAX_RANK];
        loop {
            let mut full = [0usize; crate::tensor::MAX_RANK];
            full[..r].copy_from_slice(&idx[..r]);
            full[r] = i;
            out.set(&full[..r + 1], diff.get(&idx[..r]));
            if !crate::tensor::advance(&mut idx, r) {
                break;
            }
        }
    }
    Ok(out)
}

/// Central-difference divergence over the LAST slot:
/// (div T)_{...} = sum_i [T(x + h e_i) - T(x - h e_i)]_{..., i} / (2h).
pub fn fd_divergence(t: PointFn, x: [f64; 3], h: f64) -> Tensor {
    let base = t(x);
    let r = base.rank();
    assert!(r >= 1, "divergence needs rank >= 1");
    let mut out = Tensor::zeros(r - 1);
    for i in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        let diff = t(xp).sub(&t(xm)).scale(1.0 / (2.0 * h));
        let mut idx = [0usize; crate::tensor::MAX_RANK];
        loop {
            let mut full = [0usize; crate::tensor::MAX_RANK];
            full[..r - 1].copy_from_slice(&idx[..r - 1]);
            full[r - 1] = i;
            out.add_at(&idx[..r - 1], diff.get(&full[..r]));
            if !crate::tensor::advance(&mut idx, r - 1) {
                break;
            }
        }
    }
    out
}

/// Convenience: boxed closures are the usual carriers of point-functions
/// in scenario-level code.
pub type BoxedPointFn = Box<dyn Fn([f64; 3]) -> Tensor>;
