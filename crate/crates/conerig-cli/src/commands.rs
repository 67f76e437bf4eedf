use crate::config::{BlockChoice, RunConfig};
use crate::report::{
    AuditOut, IdentityOut, Outcome, PoincareOut, ReportOut, RootOut, RunReport, SolveBlockOut, SolveOut, Timings, VerifyOut,
};
use crate::CliError;
use conerig::indicial::{annihilation_defect, indicial_roots};
use conerig::l2class::admissible_basis;
use conerig::modes::{CVec, Form, RadialOperator};
use conerig::solver::{kernel_audit, solve_field, AuditMode, ModeRhs, SOLVE_TOL};
use conerig::verify::{identity_residual, l2_norm, poincare_2form_check, random_sample, ChartGrid, Identity, Valence};
use conerig::Geometry;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Indicial roots and leading vectors per block.
    Indicial,
    /// L² classification of every Frobenius branch.
    Classify,
    /// Kernel audit (certified for β > 1, witness listing for β < 1).
    Audit,
    /// Manufactured-solution radial solves with the a-priori bound.
    Solve,
    /// Finite-difference identity suite and the 2-form Poincaré check.
    Verify,
    /// Enumerate the mode blocks only.
    Modes,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Indicial => "indicial",
            Command::Classify => "classify",
            Command::Audit => "audit",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Modes => "modes",
        }
    }
}

/// Defect above which the indicial table counts as a failed cross-check.
const ANNIHILATION_TOL: f64 = 1e-10;

struct Clock {
    enabled: bool,
    start: Instant,
    phases: Vec<(String, f64)>,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self { enabled, start: Instant::now(), phases: Vec::new() }
    }
    fn lap(&mut self, name: &str) {
        if self.enabled {
            let now = Instant::now();
            self.phases.push((name.into(), (now - self.start).as_secs_f64()));
            self.start = now;
        }
    }
    fn finish(self) -> Option<Timings> {
        self.enabled.then_some(Timings { phases: self.phases })
    }
}

pub struct RunOptions {
    pub choice: Option<BlockChoice>,
    pub identities: Vec<Identity>,
    pub timings: bool,
}

pub fn run(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let mut clock = Clock::new(opts.timings);
    let geom = cfg.geometry()?;
    let (blocks, warnings) = if command == Command::Verify { (Vec::new(), Vec::new()) } else { cfg.blocks(&geom, opts.choice)? };
    clock.lap("setup");
    let mut rep = RunReport::new(command.name(), cfg, &geom, &blocks);
    rep.warnings = warnings;
    for w in &rep.warnings {
        log::warn!("{w}");
    }
    let beta = geom.beta();
    match command {
        Command::Modes => {}
        Command::Indicial => {
            let mut bad = Vec::new();
            for b in &blocks {
                let roots = indicial_roots(b, beta);
                let defect = annihilation_defect(b, beta, &roots);
                let total: usize = roots.iter().map(|r| r.multiplicity).sum();
                if defect.is_nan() || defect > ANNIHILATION_TOL || total != 2 * b.size() {
                    bad.push(format!("{}: defect {defect}, multiplicities sum to {total}", b.label()));
                }
                rep.roots.extend(roots.iter().map(|r| RootOut::new(b, r, defect)));
            }
            if !bad.is_empty() {
                rep.outcome = Outcome { exit_code: 4, message: format!("indicial cross-check failed: {}", bad.join("; ")) };
            }
        }
        Command::Classify => {
            for &b in &blocks {
                let basis = admissible_basis(b, &geom, cfg.solver.order)?;
                rep.reports.extend(basis.reports.iter().map(ReportOut::from));
            }
            let witnesses = rep.reports.iter().filter(|r| r.witness).count();
            if witnesses > 0 {
                rep.outcome = Outcome {
                    exit_code: 3,
                    message: format!("{witnesses} branch(es) with u, du in L2 but grad u not in L2"),
                };
            }
        }
        Command::Audit => {
            let audit = kernel_audit(&geom, &blocks, &cfg.solver_settings())?;
            let code = match audit.mode {
                AuditMode::Certified if audit.no_admissible_kernel == Some(true) => 0,
                AuditMode::Certified => 4,
                AuditMode::Witness if audit.witnesses.is_empty() => 0,
                AuditMode::Witness | AuditMode::Refused => 3,
            };
            rep.outcome = Outcome { exit_code: code, message: audit.message.clone() };
            rep.audit = Some(AuditOut::from(&audit));
        }
        Command::Solve => {
            let out = manufactured_solve(&geom, &blocks, cfg)?;
            let bad_alg = out.blocks.iter().any(|b| b.algebraic_residual.is_nan() || b.algebraic_residual > 1e3 * SOLVE_TOL);
            if !out.bound_holds || bad_alg {
                rep.outcome = Outcome {
                    exit_code: 4,
                    message: format!(
                        "solve cross-check failed: bound holds = {}, algebraic residual ok = {}",
                        out.bound_holds, !bad_alg
                    ),
                };
            }
            rep.solve = Some(out);
        }
        Command::Verify => {
            let out = verify_suite(&geom, cfg, &opts.identities)?;
            if !out.all_pass {
                rep.outcome = Outcome { exit_code: 4, message: "identity suite outside tolerance".into() };
            }
            rep.verify = Some(out);
        }
    }
    clock.lap(command.name());
    rep.timings = clock.finish();
    Ok(rep)
}

/// Fixed direction of the manufactured solution `u₀ = r²(a − r) v`.
fn direction(m: usize) -> CVec<f64> {
    CVec::<f64>::from_fn(m, |i, _| Complex::new(1.0 + i as f64, 0.5 - i as f64))
}

fn manufactured_solve(geom: &Geometry, blocks: &[conerig::Block], cfg: &RunConfig) -> Result<SolveOut, CliError> {
    let settings = cfg.solver_settings();
    let a = geom.tube_radius();
    let ops = blocks
        .iter()
        .map(|&b| RadialOperator::new(geom.n(), geom.beta(), b, Form::L, settings.order + 4))
        .collect::<conerig::Result<Vec<_>>>()?;
    let u0 = move |v: &CVec<f64>, r: f64| v * Complex::from(r * r * (a - r));
    let rhs: Vec<Box<dyn Fn(f64) -> CVec<f64>>> = ops
        .iter()
        .map(|op| {
            let v = direction(op.size());
            Box::new(move |r: f64| {
                let d1 = &v * Complex::from(2.0 * a * r - 3.0 * r * r);
                let d2 = &v * Complex::from(2.0 * a - 6.0 * r);
                op.apply(r, &u0(&v, r), &d1, &d2)
            }) as Box<dyn Fn(f64) -> CVec<f64>>
        })
        .collect();
    let refs: Vec<ModeRhs<'_>> = rhs.iter().map(|f| f.as_ref() as ModeRhs<'_>).collect();
    let field = solve_field(geom, blocks, &refs, &settings)?;
    let out = blocks
        .iter()
        .zip(&field.solutions)
        .map(|(b, s)| {
            let v = direction(b.size());
            let max_error =
                s.mesh.nodes().iter().zip(&s.values).map(|(&r, x)| (x - u0(&v, r)).norm()).fold(0.0, f64::max);
            SolveBlockOut {
                block: b.label(),
                points: s.mesh.len(),
                norm_u: s.norm_u,
                norm_rhs: s.norm_rhs,
                max_error,
                residual: s.residual,
                algebraic_residual: s.algebraic_residual,
            }
        })
        .collect();
    Ok(SolveOut {
        manufactured: "u0 = r^2 (a - r) v, v_i = (1 + i) + (0.5 - i) i".into(),
        blocks: out,
        norm_u: field.norm_u,
        norm_rhs: field.norm_rhs,
        bound: field.norm_rhs / (geom.n() - 1) as f64,
        bound_holds: field.bound_holds,
    })
}

pub fn default_identities(n: usize) -> Vec<Identity> {
    if n == 3 {
        Identity::ALL.to_vec()
    } else {
        vec![Identity::W1, Identity::WS]
    }
}

fn verify_suite(geom: &Geometry, cfg: &RunConfig, ids: &[Identity]) -> Result<VerifyOut, CliError> {
    let v = &cfg.verify;
    let a = geom.tube_radius();
    let resolution = v.resolution.clone().expect("finalized config has a resolution");
    let grid = ChartGrid::new(geom, (v.r_bounds.0 * a, v.r_bounds.1 * a), v.sigma_bounds, &resolution)?;
    let ids = if ids.is_empty() { default_identities(geom.n()) } else { ids.to_vec() };
    let mut identities = Vec::new();
    for &id in &ids {
        for s in 0..v.samples as u64 {
            let seed = v.seed.wrapping_add(s);
            let f = random_sample(id.sample_valence(), &grid, &mut ChaCha8Rng::seed_from_u64(seed));
            let rec = identity_residual(id, &f, &grid)?;
            let pass = rec.order.is_some_and(|o| (o - 2.0).abs() <= v.order_tol);
            log::info!("{} seed {seed}: order {:?}", id.name(), rec.order);
            identities.push(IdentityOut {
                identity: id.name().into(),
                seed,
                sample_norm: l2_norm(&f, &grid),
                residual: rec.residual,
                residual_refined: rec.residual_refined,
                order: rec.order,
                pass,
            });
        }
    }
    let mut poincare = Vec::new();
    for s in 0..v.poincare_samples as u64 {
        let seed = v.seed.wrapping_add(s);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Separate stream from the identity samples with the same seed.
        rng.set_stream(1);
        let w = random_sample(Valence::TwoForm, &grid, &mut rng);
        let rec = poincare_2form_check(&w, &grid)?;
        poincare.push(PoincareOut { seed, lhs: rec.lhs, rhs: rec.rhs, constant: rec.constant, satisfied: rec.satisfied });
    }
    let all_pass = identities.iter().all(|r| r.pass) && poincare.iter().all(|p| p.satisfied);
    Ok(VerifyOut { resolution, steps: grid.steps().to_vec(), identities, poincare, all_pass })
}
