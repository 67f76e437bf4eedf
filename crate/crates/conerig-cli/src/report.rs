use crate::config::{Format, RunConfig};
use conerig::indicial::IndicialRoot;
use conerig::l2class::{L2Report, QuantityReport, RuleExponent};
use conerig::modes::{CVec, ModeBlock};
use conerig::solver::{AuditReport, BlockAudit, Witness};
use conerig::Geometry;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// JSON has no NaN or infinity; those become `null`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockOut {
    pub label: String,
    pub kind: String,
    pub size: usize,
    /// `λ′` for coupled3, `μ′` for scalar, 0 for coupled2.
    pub eigenvalue: f64,
    /// `p` or `p′`.
    pub frequency: i64,
}

impl From<&ModeBlock<f64>> for BlockOut {
    fn from(b: &ModeBlock<f64>) -> Self {
        Self { label: b.label(), kind: b.kind().name().into(), size: b.size(), eigenvalue: b.eigenvalue(), frequency: b.frequency() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryOut {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub cross_section: String,
    pub length: Option<f64>,
}

impl From<&Geometry> for GeometryOut {
    fn from(g: &Geometry) -> Self {
        let cross_section = match (g.circle_length(), g.sigma_chart()) {
            (Some(_), _) => "circle",
            (None, Some(_)) => "half_plane",
            (None, None) => "tabulated",
        };
        Self { n: g.n(), alpha: g.alpha(), beta: g.beta(), a: g.tube_radius(), cross_section: cross_section.into(), length: g.circle_length() }
    }
}

pub fn complex_pairs(v: &CVec<f64>) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootOut {
    pub block: String,
    pub k: f64,
    pub multiplicity: usize,
    pub log_required: bool,
    pub families: Vec<String>,
    pub signs: Vec<i8>,
    /// Basis of the leading space, entries as `[re, im]`.
    pub leading_vectors: Vec<Vec<[f64; 2]>>,
    /// Largest `‖M(k) v₀‖` over the whole root table of the block.
    pub annihilation_defect: f64,
}

impl RootOut {
    pub fn new(block: &ModeBlock<f64>, r: &IndicialRoot<f64>, defect: f64) -> Self {
        Self {
            block: block.label(),
            k: r.k,
            multiplicity: r.multiplicity,
            log_required: r.log_required,
            families: r.families.iter().map(|f| f.name().to_string()).collect(),
            signs: r.signs.clone(),
            leading_vectors: r.leading_space.iter().map(complex_pairs).collect(),
            annihilation_defect: defect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantityOut {
    pub exponent: Option<f64>,
    pub log: bool,
    pub resolved: bool,
    pub in_l2: bool,
}

impl From<QuantityReport<f64>> for QuantityOut {
    fn from(q: QuantityReport<f64>) -> Self {
        Self { exponent: finite(q.exponent), log: q.log, resolved: q.resolved, in_l2: q.in_l2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleOut {
    pub value: f64,
    pub exact: bool,
}

impl From<RuleExponent<f64>> for RuleOut {
    fn from(r: RuleExponent<f64>) -> Self {
        Self { value: r.value(), exact: r.is_exact() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOut {
    pub block: String,
    pub k: f64,
    pub family: String,
    pub sign: i8,
    pub log_seed: bool,
    pub log_degree: usize,
    pub u: QuantityOut,
    pub du: QuantityOut,
    pub grad_u: QuantityOut,
    pub grad_du: QuantityOut,
    pub delta_u: QuantityOut,
    pub rule_u: RuleOut,
    pub rule_du: RuleOut,
    pub rule_grad_u: RuleOut,
    pub rule_grad_du: RuleOut,
    pub admissible: bool,
    pub hodge_admissible: bool,
    pub rough_admissible: bool,
    pub witness: bool,
}

impl From<&L2Report<f64>> for ReportOut {
    fn from(r: &L2Report<f64>) -> Self {
        Self {
            block: r.block.label(),
            k: r.k,
            family: r.family.name().into(),
            sign: r.sign,
            log_seed: r.log_seed,
            log_degree: r.log_degree,
            u: r.u.into(),
            du: r.du.into(),
            grad_u: r.grad_u.into(),
            grad_du: r.grad_du.into(),
            delta_u: r.delta_u.into(),
            rule_u: r.rule.u.into(),
            rule_du: r.rule.du.into(),
            rule_grad_u: r.rule.grad_u.into(),
            rule_grad_du: r.rule.grad_du.into(),
            admissible: r.admissible,
            hodge_admissible: r.hodge_admissible(),
            rough_admissible: r.rough_admissible(),
            witness: r.is_witness(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAuditOut {
    pub block: String,
    pub admissible_dimension: usize,
    pub total_dimension: usize,
    pub eigmin: Option<f64>,
    pub kernel_empty: Option<bool>,
    pub excluded_log_modes: Vec<f64>,
}

impl From<&BlockAudit> for BlockAuditOut {
    fn from(b: &BlockAudit) -> Self {
        Self {
            block: b.block.label(),
            admissible_dimension: b.admissible_dimension,
            total_dimension: b.total_dimension,
            eigmin: b.eigmin,
            kernel_empty: b.kernel_empty,
            excluded_log_modes: b.excluded_log_modes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessOut {
    pub block: String,
    pub k: f64,
    pub family: String,
    pub du_exponent: Option<f64>,
    pub grad_u_exponent: Option<f64>,
}

impl From<&Witness> for WitnessOut {
    fn from(w: &Witness) -> Self {
        Self {
            block: w.block.label(),
            k: w.k,
            family: w.family.name().into(),
            du_exponent: finite(w.du_exponent),
            grad_u_exponent: finite(w.grad_u_exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOut {
    pub mode: String,
    pub blocks: Vec<BlockAuditOut>,
    pub witnesses: Vec<WitnessOut>,
    pub no_admissible_kernel: Option<bool>,
    pub message: String,
}

impl From<&AuditReport> for AuditOut {
    fn from(a: &AuditReport) -> Self {
        Self {
            mode: a.mode.name().into(),
            blocks: a.blocks.iter().map(Into::into).collect(),
            witnesses: a.witnesses.iter().map(Into::into).collect(),
            no_admissible_kernel: a.no_admissible_kernel,
            message: a.message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveBlockOut {
    pub block: String,
    pub points: usize,
    pub norm_u: f64,
    pub norm_rhs: f64,
    /// Max-norm nodal error against the manufactured solution.
    pub max_error: f64,
    pub residual: f64,
    pub algebraic_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOut {
    /// Description of the manufactured solution.
    pub manufactured: String,
    pub blocks: Vec<SolveBlockOut>,
    pub norm_u: f64,
    pub norm_rhs: f64,
    pub bound: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityOut {
    pub identity: String,
    pub seed: u64,
    pub sample_norm: f64,
    pub residual: f64,
    pub residual_refined: f64,
    pub order: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareOut {
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOut {
    pub resolution: Vec<usize>,
    pub steps: Vec<f64>,
    pub identities: Vec<IdentityOut>,
    pub poincare: Vec<PoincareOut>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

/// Wall-clock seconds per phase; only filled on request so that reports stay byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config_echo: RunConfig,
    pub geometry: GeometryOut,
    pub blocks: Vec<BlockOut>,
    pub roots: Vec<RootOut>,
    pub reports: Vec<ReportOut>,
    pub audit: Option<AuditOut>,
    pub solve: Option<SolveOut>,
    pub verify: Option<VerifyOut>,
    pub warnings: Vec<String>,
    pub outcome: Outcome,
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, geom: &Geometry, blocks: &[ModeBlock<f64>]) -> Self {
        Self {
            command: command.into(),
            config_echo: config.clone(),
            geometry: geom.into(),
            blocks: blocks.iter().map(Into::into).collect(),
            roots: Vec::new(),
            reports: Vec::new(),
            audit: None,
            solve: None,
            verify: None,
            warnings: Vec::new(),
            outcome: Outcome { exit_code: 0, message: "ok".into() },
            timings: None,
        }
    }

    /// Flat table for the CSV and table formats; one row per item of the command's main section.
    pub fn table(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let s = |x: f64| x.to_string();
        let o = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let b = |x: bool| x.to_string();
        match self.command.as_str() {
            "indicial" => (
                vec!["block", "k", "multiplicity", "log_required", "families", "annihilation_defect"],
                self.roots
                    .iter()
                    .map(|r| {
                        vec![r.block.clone(), s(r.k), r.multiplicity.to_string(), b(r.log_required), r.families.join(";"), s(r.annihilation_defect)]
                    })
                    .collect(),
            ),
            "classify" => (
                vec![
                    "block", "k", "family", "sign", "log_seed", "log_degree", "u_exp", "du_exp", "grad_u_exp", "grad_du_exp",
                    "delta_u_exp", "admissible", "witness",
                ],
                self.reports
                    .iter()
                    .map(|r| {
                        vec![
                            r.block.clone(),
                            s(r.k),
                            r.family.clone(),
                            r.sign.to_string(),
                            b(r.log_seed),
                            r.log_degree.to_string(),
                            o(r.u.exponent),
                            o(r.du.exponent),
                            o(r.grad_u.exponent),
                            o(r.grad_du.exponent),
                            o(r.delta_u.exponent),
                            b(r.admissible),
                            b(r.witness),
                        ]
                    })
                    .collect(),
            ),
            "audit" => (
                vec!["block", "admissible_dimension", "total_dimension", "eigmin", "kernel_empty", "excluded_log_modes"],
                self.audit
                    .iter()
                    .flat_map(|a| &a.blocks)
                    .map(|r| {
                        vec![
                            r.block.clone(),
                            r.admissible_dimension.to_string(),
                            r.total_dimension.to_string(),
                            o(r.eigmin),
                            r.kernel_empty.map(b).unwrap_or_default(),
                            r.excluded_log_modes.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
                        ]
                    })
                    .collect(),
            ),
            "solve" => (
                vec!["block", "points", "norm_u", "norm_rhs", "max_error", "residual", "algebraic_residual"],
                self.solve
                    .iter()
                    .flat_map(|x| &x.blocks)
                    .map(|r| {
                        vec![
                            r.block.clone(),
                            r.points.to_string(),
                            s(r.norm_u),
                            s(r.norm_rhs),
                            s(r.max_error),
                            s(r.residual),
                            s(r.algebraic_residual),
                        ]
                    })
                    .collect(),
            ),
            "verify" => (
                vec!["identity", "seed", "sample_norm", "residual", "residual_refined", "order", "pass"],
                self.verify
                    .iter()
                    .flat_map(|v| {
                        let ids = v.identities.iter().map(|r| {
                            vec![r.identity.clone(), r.seed.to_string(), s(r.sample_norm), s(r.residual), s(r.residual_refined), o(r.order), b(r.pass)]
                        });
                        // Poincaré rows reuse the columns: lhs as residual, c‖∇ω‖ as residual_refined.
                        let poi = v.poincare.iter().map(|p| {
                            vec!["POINCARE".into(), p.seed.to_string(), s(p.lhs), s(p.lhs), s(p.rhs), String::new(), b(p.satisfied)]
                        });
                        ids.chain(poi).collect::<Vec<_>>()
                    })
                    .collect(),
            ),
            _ => (
                vec!["block", "kind", "size", "eigenvalue", "frequency"],
                self.blocks
                    .iter()
                    .map(|r| vec![r.label.clone(), r.kind.clone(), r.size.to_string(), s(r.eigenvalue), r.frequency.to_string()])
                    .collect(),
            ),
        }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                let (headers, rows) = self.table();
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&headers)?;
                for r in rows {
                    w.write_record(&r)?;
                }
                w.flush()
            }
            Format::Table => {
                let (headers, rows) = self.table();
                let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
                for r in &rows {
                    for (w, c) in width.iter_mut().zip(r) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |cells: Vec<&str>| {
                    cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
                };
                writeln!(out, "{}", line(headers.clone()))?;
                for r in &rows {
                    writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
                }
                writeln!(out, "# exit {}: {}", self.outcome.exit_code, self.outcome.message)
            }
        }
    }
}
