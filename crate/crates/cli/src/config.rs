//! Scenario files: a TOML schema mirroring [`Scenario`], with every
//! expression given as an infix string over `x1, x2, x3`.
//!
//! Loading is strict. Unknown keys, wrong array lengths, expressions
//! that fail to parse, and geometry that does not fit the field domain
//! are all reported with the offending location; nothing is silently
//! defaulted except the documented optional sections.

use std::path::Path;

use micromorph_core::currents::ScalingDims;
use micromorph_core::expr::{parse, Expr, ParseError};
use micromorph_core::fields::{Domain, FieldSet};
use micromorph_core::integrals::{QuadratureRule, DEFAULT_ORDER};
use micromorph_core::material::{IsotropicSpec, MaterialError, MaterialModel, TensorField};
use micromorph_core::scenarios::{manufacture, Scenario, ScenarioError, Tolerances};
use micromorph_core::tensor::Tensor;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// The TOML error's display already carries line and column.
    #[error("{path}: {source}")]
    Toml {
        path: String,
        source: Box<toml::de::Error>,
    },
    /// `at` names the config key, the inner error the byte offset
    /// within that key's string.
    #[error("{at}: {source}")]
    Expr { at: String, source: ParseError },
    #[error("{at}: {message}")]
    Invalid { at: String, message: String },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn invalid(at: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        at: at.to_string(),
        message: message.into(),
    }
}

/// Top level of a scenario file. See `scenarios/*.toml` for annotated
/// examples of both provenance kinds and both material kinds.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    /// "manufactured": body force and couple are back-computed from
    /// `u`, `phi` so the fields solve the field equations exactly.
    /// "prescribed": sources are taken from the file as-is.
    pub provenance: String,
    pub domain: GeometrySpec,
    pub material: MaterialSpec,
    pub fields: FieldsSpec,
    pub quadrature: QuadratureSpec,
    pub dims: Option<DimsSpec>,
    pub tolerances: Option<ToleranceSpec>,
}

/// Either `kind = "box"` with `min`/`max` or `kind = "ball"` with
/// `center`/`radius`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub kind: String,
    pub min: Option<[f64; 3]>,
    pub max: Option<[f64; 3]>,
    pub center: Option<[f64; 3]>,
    pub radius: Option<f64>,
}

impl GeometrySpec {
    fn to_domain(&self, at: &str) -> Result<Domain, ConfigError> {
        match self.kind.as_str() {
            "box" => {
                if self.center.is_some() || self.radius.is_some() {
                    return Err(invalid(at, "box geometry takes min/max, not center/radius"));
                }
                let min = self.min.ok_or_else(|| invalid(at, "box needs `min`"))?;
                let max = self.max.ok_or_else(|| invalid(at, "box needs `max`"))?;
                if (0..3).any(|i| min[i] >= max[i]) {
                    return Err(invalid(at, "box needs min < max in every coordinate"));
                }
                Ok(Domain::Box { min, max })
            }
            "ball" => {
                if self.min.is_some() || self.max.is_some() {
                    return Err(invalid(at, "ball geometry takes center/radius, not min/max"));
                }
                let center = self
                    .center
                    .ok_or_else(|| invalid(at, "ball needs `center`"))?;
                let radius = self
                    .radius
                    .ok_or_else(|| invalid(at, "ball needs `radius`"))?;
                if !(radius > 0.0) {
                    return Err(invalid(at, "ball radius must be positive"));
                }
                Ok(Domain::Ball { center, radius })
            }
            other => Err(invalid(
                at,
                format!("unknown geometry kind {other:?} (expected \"box\" or \"ball\")"),
            )),
        }
    }
}

/// `kind = "isotropic"` takes the four delta-basis coefficient lists;
/// `kind = "anisotropic"` takes flattened row-major entry arrays
/// (lengths 81, 81, 729, 81, 243, 243), each optional and defaulting
/// to zero. Entries are symmetrized into their class on load; moving
/// any entry beyond the warning tolerance is reported on the run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub kind: String,
    pub coeff_a: Option<[f64; 3]>,
    pub coeff_b: Option<[f64; 3]>,
    pub coeff_c: Option<Vec<f64>>,
    pub coeff_e: Option<[f64; 3]>,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub e: Option<Vec<f64>>,
    pub f: Option<Vec<f64>>,
    pub g: Option<Vec<f64>>,
    pub modulation: Option<ModulationSpec>,
}

/// Optional scalar factors multiplying each constitutive tensor;
/// omitted entries stay 1.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSpec {
    pub a: Option<String>,
    pub b: Option<String>,
    pub c: Option<String>,
    pub e: Option<String>,
    pub f: Option<String>,
    pub g: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSpec {
    pub u: [String; 3],
    pub phi: [String; 9],
    /// Prescribed scenarios only; omitted means zero. Rejected for
    /// manufactured scenarios, whose sources are derived.
    pub body_force: Option<[String; 3]>,
    pub body_couple: Option<[String; 9]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub kind: String,
    pub min: Option<[f64; 3]>,
    pub max: Option<[f64; 3]>,
    pub center: Option<[f64; 3]>,
    pub radius: Option<f64>,
    /// Gauss-Legendre orders; both default to 8.
    pub surface_order: Option<usize>,
    pub volume_order: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSpec {
    pub n: u32,
}

/// Per-run overrides of the default thresholds.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub el_residual: Option<f64>,
    pub balance_exact: Option<f64>,
    pub balance_fd: Option<f64>,
    pub integral_rel: Option<f64>,
    pub convergence_delta: Option<f64>,
    pub isotropy_bracket: Option<f64>,
    pub fd_step: Option<f64>,
}

/// Reads and builds a scenario file.
pub fn load_path(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_str(&text, &path.display().to_string())
}

/// Parses scenario TOML; `origin` names the source in error messages.
pub fn load_str(text: &str, origin: &str) -> Result<Scenario, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|source| ConfigError::Toml {
        path: origin.to_string(),
        source: Box::new(source),
    })?;
    build(file)
}

/// Turns a parsed file into a runnable scenario, validating everything
/// the type system did not.
pub fn build(file: ScenarioFile) -> Result<Scenario, ConfigError> {
    let domain = file.domain.to_domain("domain")?;
    let material = build_material(&file.material)?;
    let rule = build_rule(&file.quadrature)?;

    let u = parse_exprs::<3>(&file.fields.u, "fields.u")?;
    let phi = parse_exprs::<9>(&file.fields.phi, "fields.phi")?;

    let mut scenario = match file.provenance.as_str() {
        "manufactured" => {
            if file.fields.body_force.is_some() || file.fields.body_couple.is_some() {
                return Err(invalid(
                    "fields",
                    "manufactured scenarios derive their sources; \
                     remove body_force/body_couple or set provenance = \"prescribed\"",
                ));
            }
            manufacture(&file.name, &material, u, phi, domain, rule)?
        }
        "prescribed" => {
            let zero3 = || core::array::from_fn(|_| String::from("0"));
            let zero9 = || core::array::from_fn(|_| String::from("0"));
            let bf = parse_exprs::<3>(
                &file.fields.body_force.unwrap_or_else(zero3),
                "fields.body_force",
            )?;
            let bc = parse_exprs::<9>(
                &file.fields.body_couple.unwrap_or_else(zero9),
                "fields.body_couple",
            )?;
            let fields = FieldSet::new(u, phi, bf, bc, domain).map_err(ScenarioError::from)?;
            Scenario::prescribed(&file.name, material, fields, rule)?
        }
        other => {
            return Err(invalid(
                "provenance",
                format!("expected \"manufactured\" or \"prescribed\", got {other:?}"),
            ))
        }
    };

    if let Some(dims) = &file.dims {
        if dims.n < 2 {
            return Err(invalid("dims.n", "spatial dimension must be at least 2"));
        }
        scenario.dims = ScalingDims::for_dimension(dims.n);
    }
    if let Some(t) = &file.tolerances {
        apply_tolerances(&mut scenario.tolerances, t)?;
    }
    Ok(scenario)
}

fn apply_tolerances(base: &mut Tolerances, spec: &ToleranceSpec) -> Result<(), ConfigError> {
    let pairs = [
        (&mut base.el_residual, spec.el_residual, "el_residual"),
        (&mut base.balance_exact, spec.balance_exact, "balance_exact"),
        (&mut base.balance_fd, spec.balance_fd, "balance_fd"),
        (&mut base.integral_rel, spec.integral_rel, "integral_rel"),
        (
            &mut base.convergence_delta,
            spec.convergence_delta,
            "convergence_delta",
        ),
        (
            &mut base.isotropy_bracket,
            spec.isotropy_bracket,
            "isotropy_bracket",
        ),
        (&mut base.fd_step, spec.fd_step, "fd_step"),
    ];
    for (slot, value, name) in pairs {
        if let Some(v) = value {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(
                    &format!("tolerances.{name}"),
                    "tolerance must be finite and positive",
                ));
            }
            *slot = v;
        }
    }
    Ok(())
}

fn parse_exprs<const N: usize>(src: &[String; N], at: &str) -> Result<[Expr; N], ConfigError> {
    let mut out: [Expr; N] = core::array::from_fn(|_| Expr::zero());
    for (i, s) in src.iter().enumerate() {
        out[i] = parse(s).map_err(|source| ConfigError::Expr {
            at: format!("{at}[{i}]"),
            source,
        })?;
    }
    Ok(out)
}

fn build_rule(spec: &QuadratureSpec) -> Result<QuadratureRule, ConfigError> {
    let geom = GeometrySpec {
        kind: spec.kind.clone(),
        min: spec.min,
        max: spec.max,
        center: spec.center,
        radius: spec.radius,
    }
    .to_domain("quadrature")?;
    let surface = spec.surface_order.unwrap_or(DEFAULT_ORDER);
    let volume = spec.volume_order.unwrap_or(DEFAULT_ORDER);
    QuadratureRule::new(geom, surface, volume)
        .map_err(|e| invalid("quadrature", e.to_string()))
}

fn build_material(spec: &MaterialSpec) -> Result<MaterialModel, ConfigError> {
    let anisotropic_keys = [
        (&spec.a, "a"),
        (&spec.b, "b"),
        (&spec.c, "c"),
        (&spec.e, "e"),
        (&spec.f, "f"),
        (&spec.g, "g"),
    ];
    let model = match spec.kind.as_str() {
        "isotropic" => {
            for (v, name) in &anisotropic_keys {
                if v.is_some() {
                    return Err(invalid(
                        &format!("material.{name}"),
                        "entry arrays belong to kind = \"anisotropic\"",
                    ));
                }
            }
            let need = |v: Option<[f64; 3]>, name: &str| {
                v.ok_or_else(|| invalid("material", format!("isotropic material needs `{name}`")))
            };
            let coeff_c = spec
                .coeff_c
                .as_ref()
                .ok_or_else(|| invalid("material", "isotropic material needs `coeff_c`"))?;
            let coeff_c: [f64; 15] = coeff_c.as_slice().try_into().map_err(|_| {
                invalid(
                    "material.coeff_c",
                    format!("expected 15 coefficients, got {}", coeff_c.len()),
                )
            })?;
            MaterialModel::isotropic(&IsotropicSpec {
                coeff_a: need(spec.coeff_a, "coeff_a")?,
                coeff_b: need(spec.coeff_b, "coeff_b")?,
                coeff_c,
                coeff_e: need(spec.coeff_e, "coeff_e")?,
            })
        }
        "anisotropic" => {
            for (v, name) in [
                (spec.coeff_a.is_some(), "coeff_a"),
                (spec.coeff_b.is_some(), "coeff_b"),
                (spec.coeff_c.is_some(), "coeff_c"),
                (spec.coeff_e.is_some(), "coeff_e"),
            ] {
                if v {
                    return Err(invalid(
                        &format!("material.{name}"),
                        "coefficient lists belong to kind = \"isotropic\"",
                    ));
                }
            }
            let field = |v: &Option<Vec<f64>>, name: &str, rank: usize| {
                entries_to_field(v.as_deref(), name, rank)
            };
            MaterialModel::anisotropic(
                field(&spec.a, "a", 4)?,
                field(&spec.b, "b", 4)?,
                field(&spec.c, "c", 6)?,
                field(&spec.e, "e", 4)?,
                field(&spec.f, "f", 5)?,
                field(&spec.g, "g", 5)?,
            )?
        }
        other => {
            return Err(invalid(
                "material.kind",
                format!("expected \"isotropic\" or \"anisotropic\", got {other:?}"),
            ))
        }
    };
    match &spec.modulation {
        None => Ok(model),
        Some(m) => {
            let one = |v: &Option<String>, name: &str| -> Result<Expr, ConfigError> {
                match v {
                    None => Ok(Expr::one()),
                    Some(s) => parse(s).map_err(|source| ConfigError::Expr {
                        at: format!("material.modulation.{name}"),
                        source,
                    }),
                }
            };
            Ok(model.with_modulations([
                one(&m.a, "a")?,
                one(&m.b, "b")?,
                one(&m.c, "c")?,
                one(&m.e, "e")?,
                one(&m.f, "f")?,
                one(&m.g, "g")?,
            ]))
        }
    }
}

/// Flattened row-major entries to a constant tensor field; `None` is
/// the zero field.
fn entries_to_field(
    entries: Option<&[f64]>,
    name: &str,
    rank: usize,
) -> Result<TensorField, ConfigError> {
    let Some(data) = entries else {
        return Ok(TensorField::zero(rank));
    };
    let want = 3usize.pow(rank as u32);
    if data.len() != want {
        return Err(invalid(
            &format!("material.{name}"),
            format!("rank-{rank} tensor needs {want} row-major entries, got {}", data.len()),
        ));
    }
    let t = Tensor::from_fn(rank, |idx| data[micromorph_core::tensor::offset(idx)]);
    Ok(TensorField::constant(t))
}
