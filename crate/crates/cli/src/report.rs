//! Check execution and report rendering.
//!
//! A run executes the requested checks in a fixed canonical order and
//! collects one row per checked quantity. Every tolerance comparison
//! lives in the `discrepancy` column: residuals and refinement deltas
//! are discrepancies from zero, integral rows additionally carry their
//! surface and volume values. Machine formats print floats with 17
//! significant digits, so equal seeds give byte-identical output.

use clap::ValueEnum;
use micromorph_core::kinetics::EnergyConvention;
use micromorph_core::integrals::IntegralReport;
use micromorph_core::scenarios::{Provenance, Scenario, ScenarioError};
use micromorph_core::tensor::Tensor;

/// The checks `run` understands, in canonical execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum CheckKind {
    /// Max field-equation residual over seeded interior points.
    CheckEl,
    /// Balance-law residuals, exact and finite-difference paths, plus
    /// the isotropy bracket norm.
    CheckBalance,
    /// J, L, M in surface and volume form with their discrepancies.
    Integrals,
    /// Integral change under surface-order doubling.
    Convergence,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [
        CheckKind::CheckEl,
        CheckKind::CheckBalance,
        CheckKind::Integrals,
        CheckKind::Convergence,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned human-readable text.
    Table,
    /// Fixed columns: quantity, component, surface_value, volume_value,
    /// discrepancy, tolerance, pass.
    Csv,
    /// A single JSON record with run metadata and the same rows.
    StructuredRecord,
}

impl Format {
    pub fn is_machine(self) -> bool {
        self != Format::Table
    }
}

pub struct RunSettings {
    pub points: usize,
    pub seed: u64,
    pub commands: Vec<CheckKind>,
}

/// One checked quantity. `tolerance: None` marks an informational row,
/// which always passes.
#[derive(Clone, Debug)]
pub struct Row {
    pub quantity: &'static str,
    pub component: &'static str,
    pub surface_value: Option<f64>,
    pub volume_value: Option<f64>,
    pub discrepancy: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Row {
    fn checked(
        quantity: &'static str,
        component: &'static str,
        discrepancy: f64,
        tolerance: Option<f64>,
    ) -> Self {
        Self {
            quantity,
            component,
            surface_value: None,
            volume_value: None,
            discrepancy: Some(discrepancy),
            tolerance,
            pass: tolerance.is_none_or(|tol| discrepancy <= tol),
        }
    }
}

pub struct Report {
    pub scenario: String,
    pub provenance: &'static str,
    pub isotropic: bool,
    pub homogeneous: bool,
    pub symmetrization_warning: bool,
    pub energy_without_sources: bool,
    pub seed: u64,
    pub points: usize,
    pub surface_order: usize,
    pub volume_order: usize,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// First failing row, for the exit-1 diagnostic.
    pub fn first_failure(&self) -> Option<&Row> {
        self.rows.iter().find(|r| !r.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.to_table(),
            Format::Csv => self.to_csv(),
            Format::StructuredRecord => self.to_json(),
        }
    }
}

/// Executes the requested checks. Duplicates are collapsed and the
/// canonical order is enforced, so the row sequence depends only on the
/// set of commands, never on their spelling order.
pub fn run(scenario: &Scenario, settings: &RunSettings) -> Result<Report, ScenarioError> {
    let mut commands = settings.commands.clone();
    commands.sort();
    commands.dedup();

    let tol = &scenario.tolerances;
    let mut rows = Vec::new();
    // integrals and convergence share one quadrature pass
    let mut integral_report: Option<IntegralReport> = None;

    for command in &commands {
        match command {
            CheckKind::CheckEl => {
                let worst = scenario.max_el_residual(settings.points, settings.seed)?;
                rows.push(Row::checked("el_residual", "max", worst, Some(tol.el_residual)));
            }
            CheckKind::CheckBalance => {
                let mut exact = [0.0_f64; 3];
                let mut fd = [0.0_f64; 3];
                for x in scenario.interior_points(settings.points, settings.seed) {
                    let b = scenario.balance_at(x)?;
                    exact[0] = exact[0].max(b.translational.max_abs());
                    exact[1] = exact[1].max(b.rotational.max_abs());
                    exact[2] = exact[2].max(b.scaling.abs());
                    let b = scenario.balance_fd_at(x)?;
                    fd[0] = fd[0].max(b.translational.max_abs());
                    fd[1] = fd[1].max(b.rotational.max_abs());
                    fd[2] = fd[2].max(b.scaling.abs());
                }
                let bracket = scenario.max_isotropy_bracket(settings.points, settings.seed)?;
                const LAWS: [&str; 3] = ["translational", "rotational", "scaling"];
                for (i, law) in LAWS.iter().enumerate() {
                    rows.push(Row::checked("balance_exact", law, exact[i], Some(tol.balance_exact)));
                }
                for (i, law) in LAWS.iter().enumerate() {
                    rows.push(Row::checked("balance_fd", law, fd[i], Some(tol.balance_fd)));
                }
                // checked only when the material claims isotropy;
                // informational otherwise
                let bracket_tol = scenario
                    .material
                    .is_isotropic()
                    .then_some(tol.isotropy_bracket);
                rows.push(Row::checked("isotropy_bracket", "max", bracket, bracket_tol));
            }
            CheckKind::Integrals => {
                if integral_report.is_none() {
                    integral_report = Some(scenario.integral_report()?);
                }
                let r = integral_report.as_ref().expect("just filled");
                push_vector_rows(&mut rows, "J", &r.j_surface, &r.j_volume, tol.integral_rel);
                push_vector_rows(&mut rows, "L", &r.l_surface, &r.l_volume, tol.integral_rel);
                rows.push(Row {
                    quantity: "M",
                    component: "scalar",
                    surface_value: Some(r.m_surface),
                    volume_value: Some(r.m_volume),
                    discrepancy: Some(r.m_discrepancy),
                    tolerance: Some(tol.integral_rel),
                    pass: r.m_discrepancy <= tol.integral_rel,
                });
            }
            CheckKind::Convergence => {
                if integral_report.is_none() {
                    integral_report = Some(scenario.integral_report()?);
                }
                let r = integral_report.as_ref().expect("just filled");
                let deltas = [
                    ("J", r.j_refinement_delta),
                    ("L", r.l_refinement_delta),
                    ("M", r.m_refinement_delta),
                ];
                for (name, delta) in deltas {
                    rows.push(Row::checked(
                        "convergence_delta",
                        name,
                        delta,
                        Some(tol.convergence_delta),
                    ));
                }
            }
        }
    }

    Ok(Report {
        scenario: scenario.name.clone(),
        provenance: match scenario.provenance {
            Provenance::Manufactured => "manufactured",
            Provenance::Prescribed => "prescribed",
        },
        isotropic: scenario.material.is_isotropic(),
        homogeneous: scenario.material.is_homogeneous(),
        symmetrization_warning: scenario.material.symmetrization_warning(),
        energy_without_sources: scenario.convention == EnergyConvention::WithoutSources,
        seed: settings.seed,
        points: settings.points,
        surface_order: scenario.rule.surface_order(),
        volume_order: scenario.rule.volume_order(),
        rows,
    })
}

/// Component rows for a rank-1 integral pair. Each row's discrepancy
/// uses the whole vector's denominator, so the rows' maximum equals the
/// aggregate discrepancy.
fn push_vector_rows(
    rows: &mut Vec<Row>,
    quantity: &'static str,
    surface: &Tensor,
    volume: &Tensor,
    tolerance: f64,
) {
    const COMPONENTS: [&str; 3] = ["1", "2", "3"];
    let denom = 1.0_f64.max(surface.max_abs()).max(volume.max_abs());
    for (k, component) in COMPONENTS.iter().enumerate() {
        let s = surface.get(&[k]);
        let v = volume.get(&[k]);
        let d = (s - v).abs() / denom;
        rows.push(Row {
            quantity,
            component,
            surface_value: Some(s),
            volume_value: Some(v),
            discrepancy: Some(d),
            tolerance: Some(tolerance),
            pass: d <= tolerance,
        });
    }
}

/// 17 significant digits: enough that reading the decimal back gives
/// the same bits.
fn machine(x: f64) -> String {
    format!("{x:.16e}")
}

fn machine_opt(x: Option<f64>) -> String {
    x.map(machine).unwrap_or_default()
}

impl Report {
    fn to_csv(&self) -> String {
        let mut out =
            String::from("quantity,component,surface_value,volume_value,discrepancy,tolerance,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.quantity,
                r.component,
                machine_opt(r.surface_value),
                machine_opt(r.volume_value),
                machine_opt(r.discrepancy),
                machine_opt(r.tolerance),
                r.pass,
            ));
        }
        out
    }

    fn to_json(&self) -> String {
        let field = |x: Option<f64>| x.map(machine).unwrap_or_else(|| String::from("null"));
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"scenario\": {},\n", json_string(&self.scenario)));
        out.push_str(&format!("  \"provenance\": \"{}\",\n", self.provenance));
        out.push_str(&format!("  \"material_isotropic\": {},\n", self.isotropic));
        out.push_str(&format!("  \"material_homogeneous\": {},\n", self.homogeneous));
        out.push_str(&format!(
            "  \"symmetrization_warning\": {},\n",
            self.symmetrization_warning
        ));
        out.push_str(&format!(
            "  \"energy_without_sources\": {},\n",
            self.energy_without_sources
        ));
        out.push_str(&format!("  \"seed\": {},\n", self.seed));
        out.push_str(&format!("  \"points\": {},\n", self.points));
        out.push_str(&format!("  \"surface_order\": {},\n", self.surface_order));
        out.push_str(&format!("  \"volume_order\": {},\n", self.volume_order));
        out.push_str(&format!("  \"pass\": {},\n", self.passed()));
        out.push_str("  \"rows\": [\n");
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(&format!(
                "    {{\"quantity\": \"{}\", \"component\": \"{}\", \
                 \"surface_value\": {}, \"volume_value\": {}, \"discrepancy\": {}, \
                 \"tolerance\": {}, \"pass\": {}}}{}\n",
                r.quantity,
                r.component,
                field(r.surface_value),
                field(r.volume_value),
                field(r.discrepancy),
                field(r.tolerance),
                r.pass,
                if i + 1 == self.rows.len() { "" } else { "," },
            ));
        }
        out.push_str("  ]\n}\n");
        out
    }

    fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario     {} ({})\n", self.scenario, self.provenance));
        out.push_str(&format!(
            "material     {}, {}\n",
            if self.isotropic { "isotropic" } else { "anisotropic" },
            if self.homogeneous {
                "homogeneous"
            } else {
                "inhomogeneous"
            },
        ));
        if self.symmetrization_warning {
            out.push_str("warning      constitutive entries moved by class symmetrization\n");
        }
        if self.energy_without_sources {
            out.push_str("energy       without source work terms\n");
        }
        out.push_str(&format!("sampling     {} points, seed {}\n", self.points, self.seed));
        out.push_str(&format!(
            "quadrature   surface order {}, volume order {}\n\n",
            self.surface_order, self.volume_order
        ));

        let cell = |x: Option<f64>| match x {
            Some(v) => format!("{v:>13.4e}"),
            None => format!("{:>13}", "-"),
        };
        out.push_str(&format!(
            "{:<18} {:<14} {:>13} {:>13} {:>13} {:>13}  {}\n",
            "quantity", "component", "surface", "volume", "discrepancy", "tolerance", "status"
        ));
        for r in &self.rows {
            let status = match (r.pass, r.tolerance) {
                (_, None) => "info",
                (true, _) => "pass",
                (false, _) => "FAIL",
            };
            out.push_str(&format!(
                "{:<18} {:<14} {} {} {} {}  {}\n",
                r.quantity,
                r.component,
                cell(r.surface_value),
                cell(r.volume_value),
                cell(r.discrepancy),
                cell(r.tolerance),
                status,
            ));
        }

        out.push('\n');
        match self.first_failure() {
            None => out.push_str("RESULT: PASS\n"),
            Some(r) => out.push_str(&format!(
                "RESULT: FAIL ({}[{}] = {:.4e} > {:.4e})\n",
                r.quantity,
                r.component,
                r.discrepancy.unwrap_or(f64::NAN),
                r.tolerance.unwrap_or(f64::NAN),
            )),
        }
        out
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
