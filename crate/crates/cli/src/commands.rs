use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use torusforge::averaging::{
    averaged_seed, branch_continuation, hypothesis_check, lyapunov_on, melnikov_pair, rect_grid, to_standard_form,
    BranchConfig, HtndReport, LyapunovExpansion, NsBranch, ND_ZERO_TOL,
};
use torusforge::criteria::{
    evaluate_base_criteria, evaluate_perturbation_criteria, AveragedCoefficients, BaseCriteria, HopfZeroSystem,
    PerturbationCriteria, PerturbationFamily,
};
use torusforge::expr::{parse_field, Poly};
use torusforge::flow::{fmt17, simulate, write_trajectory_csv, IntegratorConfig, PolyField};
use torusforge::lift::{
    find_separating_plane, normalize_scale, parse_rational, retune_l1, tune_lift_parameters, Ball, OmegaSample, SeparatingPlane, TuneConfig,
};
use torusforge::torus::{certify_torus, write_curve_csv, TorusCertificate, TorusConfig};

use crate::error::{CliError, ErrorObject, EXIT_NOT_APPLICABLE, EXIT_OK};
use crate::input::{InputDoc, PerturbationDoc, SystemDoc};
use crate::output::{to_json, Envelope, RunEcho, TOOL, VERSION};
use crate::Args;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Everything a command hands back: the report, optional CSV data, exit status.
pub struct Outcome {
    pub report: Vec<u8>,
    pub csv: Option<Vec<u8>>,
    /// Extra JSON artifacts as `(file name, bytes)`.
    pub extra: Vec<(String, Vec<u8>)>,
    pub exit: i32,
}

pub struct Ctx<'a> {
    pub args: &'a Args,
    pub doc: &'a InputDoc,
    pub format: Format,
    pub command: &'a str,
    pub sha256: &'a str,
    pub echo: &'a RunEcho,
}

impl Ctx<'_> {
    fn system(&self) -> Result<HopfZeroSystem, CliError> {
        let s = &self.doc.system;
        Ok(HopfZeroSystem::parse(&s.p, &s.q, &s.r)?)
    }

    fn family(&self, base: &BaseCriteria) -> Result<Option<PerturbationFamily>, CliError> {
        if self.args.simple {
            return Ok(Some(PerturbationFamily::simple(base.beta)));
        }
        Ok(match &self.doc.perturbation {
            None => None,
            Some(PerturbationDoc::Simple { .. }) => Some(PerturbationFamily::simple(base.beta)),
            Some(PerturbationDoc::Explicit { u, v, w }) => Some(PerturbationFamily::parse(u, v, w)?),
        })
    }

    fn require_family(&self, base: &BaseCriteria) -> Result<PerturbationFamily, CliError> {
        self.family(base)?
            .ok_or_else(|| CliError::Schema("this command needs a perturbation block or --simple".into()))
    }

    fn interval(&self) -> Result<[f64; 2], CliError> {
        self.doc
            .interval
            .ok_or_else(|| CliError::Schema("this command needs an interval [lo, hi]".into()))
    }

    fn mu(&self) -> Option<f64> {
        self.args.mu.or(self.doc.parameters.as_ref().and_then(|p| p.mu))
    }

    fn eps(&self) -> Option<f64> {
        self.args.eps.or(self.doc.parameters.as_ref().and_then(|p| p.eps))
    }

    fn need(v: Option<f64>, name: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Schema(format!("{name} is required (parameters.{name} or --{name})")))
    }

    fn integrator(&self, mut cfg: IntegratorConfig) -> IntegratorConfig {
        if let Some(t) = &self.doc.tolerances {
            cfg.atol = t.atol.unwrap_or(cfg.atol);
            cfg.rtol = t.rtol.unwrap_or(cfg.rtol);
        }
        if let Some(tol) = self.args.tol {
            cfg.rtol = tol;
            cfg.atol = 1e-2 * tol;
        }
        cfg
    }

    fn emit<T: Serialize>(&self, report: &T, csv: Option<Vec<u8>>, exit: i32) -> Outcome {
        Outcome {
            report: to_json(&Envelope {
                tool: TOOL,
                version: VERSION,
                command: self.command,
                input_sha256: Some(self.sha256),
                run: self.echo,
                artifacts: None,
                report: Some(report),
                error: None,
            }),
            csv,
            extra: Vec::new(),
            exit,
        }
    }

    fn no_csv(&self, command: &str) -> Result<(), CliError> {
        if self.format == Format::Csv {
            return Err(CliError::Schema(format!("{command} has no CSV output; use --format json")));
        }
        Ok(())
    }
}

fn exprs(fam: &PerturbationFamily) -> [String; 3] {
    [0, 1, 2].map(|i| fam.exprs[i].to_string())
}

#[derive(Serialize)]
struct AnalyzeReport {
    system: SystemDoc,
    perturbation: Option<[String; 3]>,
    simple_case: bool,
    base: BaseCriteria,
    perturbation_criteria: Option<PerturbationCriteria>,
    perturbation_error: Option<ErrorObject>,
    lyapunov: Option<LyapunovExpansion>,
    lyapunov_error: Option<ErrorObject>,
    hypotheses: Option<HtndReport>,
    applicable: bool,
}

pub fn analyze(ctx: &Ctx) -> Result<Outcome, CliError> {
    ctx.no_csv("analyze")?;
    let sys = ctx.system()?;
    let base = evaluate_base_criteria(&sys)?;
    let fam = ctx.family(&base)?;
    let mut rep = AnalyzeReport {
        system: ctx.doc.system.clone(),
        perturbation: fam.as_ref().map(exprs),
        simple_case: fam.as_ref().is_some_and(|f| f.simple_case),
        applicable: base.nondegenerate,
        base,
        perturbation_criteria: None,
        perturbation_error: None,
        lyapunov: None,
        lyapunov_error: None,
        hypotheses: None,
    };
    if let (Some(fam), Some(interval)) = (&fam, ctx.doc.interval) {
        match evaluate_perturbation_criteria(&sys, fam, interval) {
            Err(e) => {
                rep.perturbation_error = Some(CliError::from(e).object());
                rep.applicable = false;
            }
            Ok(pc) => {
                if let Some(eps) = ctx.eps().filter(|&e| e != 0.0) {
                    let cfg = ctx.integrator(IntegratorConfig::tight());
                    match lyapunov_on(&sys, fam, pc.mu0, vec![eps, eps / 2.0, eps / 4.0], &cfg) {
                        Ok(l) => rep.lyapunov = Some(l),
                        Err(e) => rep.lyapunov_error = Some(CliError::from(e).object()),
                    }
                }
                let co = AveragedCoefficients::new(&sys, fam)?;
                let l1j = rep.lyapunov.as_ref().map(|l| [l.l11, l.l12]);
                let h = hypothesis_check(&co, rep.base.omega, interval, pc.mu0, pc.alpha_d, l1j);
                let nd_ok = h.nondegeneracy.holds || rep.lyapunov.is_none();
                rep.applicable &= h.hopf.holds && h.transversality.holds && nd_ok;
                rep.hypotheses = Some(h);
                rep.perturbation_criteria = Some(pc);
            }
        }
    }
    let exit = if rep.applicable { EXIT_OK } else { EXIT_NOT_APPLICABLE };
    Ok(ctx.emit(&rep, None, exit))
}

#[derive(Serialize)]
struct MelnikovRow {
    r: f64,
    w: f64,
    f1: [f64; 2],
    f1_quadrature: [f64; 2],
    f2: [f64; 2],
}

#[derive(Serialize)]
struct MelnikovReport {
    mu: f64,
    r_range: [f64; 2],
    w_range: [f64; 2],
    grid: usize,
    max_closed_vs_quadrature: f64,
    points: Vec<MelnikovRow>,
}

pub fn melnikov(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sys = ctx.system()?;
    let base = evaluate_base_criteria(&sys)?;
    let fam = ctx.require_family(&base)?;
    let mu = Ctx::need(ctx.mu(), "mu")?;
    let n = ctx.args.grid.unwrap_or(11);
    let co = AveragedCoefficients::new(&sys, &fam)?;
    let (r_range, w_range) = match averaged_seed(&co, mu) {
        Ok([r, w]) => ([0.5 * r, 1.5 * r], [w - 0.5 * r, w + 0.5 * r]),
        Err(_) => ([0.5, 2.0], [-1.0, 1.0]),
    };
    let std = to_standard_form(&sys, &fam, mu, 0.5 * r_range[0], 2.0 * r_range[1])?;
    let mel = melnikov_pair(std, &co);
    let points: Vec<MelnikovRow> = rect_grid(r_range, w_range, n)
        .par_iter()
        .map(|&[r, w]| {
            Ok(MelnikovRow {
                r,
                w,
                f1: mel.f1(r, w),
                f1_quadrature: mel.f1_quadrature(r, w)?,
                f2: mel.f2(r, w)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let max_dev = points
        .iter()
        .map(|p| (p.f1[0] - p.f1_quadrature[0]).abs().max((p.f1[1] - p.f1_quadrature[1]).abs()))
        .fold(0.0, f64::max);
    let csv = (ctx.format == Format::Csv).then(|| {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r", "w", "f1_r", "f1_w", "f1q_r", "f1q_w", "f2_r", "f2_w"]).expect("in-memory csv");
        for p in &points {
            let row = [p.r, p.w, p.f1[0], p.f1[1], p.f1_quadrature[0], p.f1_quadrature[1], p.f2[0], p.f2[1]];
            w.write_record(row.map(fmt17)).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    });
    let rep = MelnikovReport {
        mu,
        r_range,
        w_range,
        grid: n,
        max_closed_vs_quadrature: max_dev,
        points: if ctx.format == Format::Json { points } else { Vec::new() },
    };
    Ok(ctx.emit(&rep, csv, EXIT_OK))
}

#[derive(Serialize)]
struct BranchReport {
    mu0: f64,
    alpha_d: f64,
    mu1: f64,
    xi_slices: [f64; 2],
    l11: f64,
    l12: f64,
    branch: NsBranch,
    lyapunov: LyapunovExpansion,
}

fn ladder(eps: Option<f64>) -> Vec<f64> {
    match eps {
        Some(e) if e != 0.0 => vec![e, e / 2.0, e / 4.0],
        _ => BranchConfig::default().eps_ladder,
    }
}

pub fn branch(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sys = ctx.system()?;
    let base = evaluate_base_criteria(&sys)?;
    let fam = ctx.require_family(&base)?;
    let pc = evaluate_perturbation_criteria(&sys, &fam, ctx.interval()?)?;
    let bc = BranchConfig {
        eps_ladder: ladder(ctx.eps()),
        integrator: ctx.integrator(IntegratorConfig::tight()),
    };
    let br = branch_continuation(&sys, &fam, &base, pc.mu0, &bc)?;
    let ly = lyapunov_on(&sys, &fam, pc.mu0, bc.eps_ladder.clone(), &bc.integrator)?;
    let csv = (ctx.format == Format::Csv).then(|| {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["eps", "mu", "theta", "modulus_residual", "xi_r", "xi_w"]).expect("in-memory csv");
        for c in &br.curve {
            let row = [c.eps, c.mu, c.theta, c.modulus_residual, c.fixed.xi[0], c.fixed.xi[1]];
            w.write_record(row.map(fmt17)).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    });
    let rep = BranchReport {
        mu0: pc.mu0,
        alpha_d: pc.alpha_d,
        mu1: br.mu1,
        xi_slices: br.xi_slices,
        l11: ly.l11,
        l12: ly.l12,
        branch: br,
        lyapunov: ly,
    };
    Ok(ctx.emit(&rep, csv, EXIT_OK))
}

#[derive(Serialize)]
struct SimulateReport {
    mu: f64,
    eps: f64,
    x0: [f64; 3],
    t_end: f64,
    steps: usize,
    rejected: usize,
    final_state: Vec<f64>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

pub fn simulate_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sys = ctx.system()?;
    let base = evaluate_base_criteria(&sys)?;
    let fam = ctx.require_family(&base)?;
    let mu = Ctx::need(ctx.mu(), "mu")?;
    let eps = Ctx::need(ctx.eps(), "eps")?;
    let params = ctx.doc.parameters.clone().unwrap_or_default();
    let x0 = match params.x0 {
        Some(x) => x,
        None => {
            let co = AveragedCoefficients::new(&sys, &fam)?;
            let seed = averaged_seed(&co, mu).ok().filter(|_| eps != 0.0).ok_or_else(|| {
                CliError::Schema("no averaged equilibrium to start from; give parameters.x0".into())
            })?;
            [1.05 * eps * seed[0], 0.0, eps * seed[1]]
        }
    };
    let t_end = params.t_end.unwrap_or(200.0 * PI);
    let field = PolyField::original(&sys, &fam, mu, eps);
    let tr = simulate(&field, x0, t_end, &ctx.integrator(IntegratorConfig::default()))?;
    let csv = if ctx.format == Format::Csv {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &tr)?;
        Some(buf)
    } else {
        None
    };
    let json = ctx.format == Format::Json;
    let rep = SimulateReport {
        mu,
        eps,
        x0,
        t_end,
        steps: tr.times.len(),
        rejected: tr.rejected,
        final_state: tr.final_state().to_vec(),
        times: if json { tr.times.clone() } else { Vec::new() },
        states: if json { tr.states.clone() } else { Vec::new() },
    };
    Ok(ctx.emit(&rep, csv, EXIT_OK))
}

#[derive(Serialize)]
struct CertifyReport {
    mu0: f64,
    /// `mu` on the Neimark-Sacker curve at this `eps`.
    mu_curve: f64,
    j_star: u8,
    l1_jstar: f64,
    lyapunov: LyapunovExpansion,
    certificate: TorusCertificate,
}

pub fn certify(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sys = ctx.system()?;
    let base = evaluate_base_criteria(&sys)?;
    let fam = ctx.require_family(&base)?;
    let mu = Ctx::need(ctx.mu(), "mu")?;
    let eps = Ctx::need(ctx.eps(), "eps")?;
    let pc = evaluate_perturbation_criteria(&sys, &fam, ctx.interval()?)?;
    let ly = lyapunov_on(&sys, &fam, pc.mu0, ladder(Some(eps)), &ctx.integrator(IntegratorConfig::tight()))?;
    let scale = ly.l11.abs().max(ly.l12.abs()).max(1.0);
    let (j_star, l1_jstar) = if ly.l11.abs() > ND_ZERO_TOL * scale { (1, ly.l11) } else { (2, ly.l12) };
    let mut cfg = TorusConfig {
        integrator: ctx.integrator(IntegratorConfig::default()),
        ..TorusConfig::default()
    };
    if let Some(n) = ctx.args.grid {
        cfg.seeds = n.max(1);
    }
    if let Some(s) = ctx.doc.tolerances.as_ref().and_then(|t| t.settle) {
        cfg.settle_tol = s;
    }
    let mu_curve = ly.mu[0];
    let cert = certify_torus(&sys, &fam, mu, eps, l1_jstar, Some(mu_curve), &cfg)?;
    let csv = if ctx.format == Format::Csv {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &cert)?;
        Some(buf)
    } else {
        None
    };
    let rep = CertifyReport {
        mu0: pc.mu0,
        mu_curve,
        j_star,
        l1_jstar,
        lyapunov: ly,
        certificate: cert,
    };
    Ok(ctx.emit(&rep, csv, EXIT_OK))
}

#[derive(Serialize)]
struct LiftReport {
    seed: [String; 3],
    plane: SeparatingPlane,
    l_star: String,
    delta_star: String,
    degree: u32,
    sqrt_delta: String,
    sqrt_exact: bool,
    /// `X_{L*, delta*}` around the regular point.
    field: [String; 3],
    characteristic_polynomial: [String; 4],
    linear_residual: f64,
    l1_jitter: Option<String>,
    criteria: BaseCriteria,
    a_fit: [f64; 3],
    a_limit_printed: f64,
    b_linear_residual: f64,
    omega_samples: Vec<OmegaSample>,
    /// Conjugated Hopf-Zero system, exact.
    system: SystemDoc,
    /// `system` dilated by `dilation` so that `Omega` lies in `[1, 4)`.
    dilation: String,
    /// Cubic term added after dilation to reach `lift.l1_target`.
    l1_cubic: Option<String>,
    /// The dilated system as an input document for the other commands.
    lifted_input: InputDoc,
}

pub fn lift(ctx: &Ctx) -> Result<Outcome, CliError> {
    ctx.no_csv("lift")?;
    let s = &ctx.doc.system;
    let parse = |name: &str, src: &str| {
        parse_field(src)
            .map(|e| Poly::from_expr(&e))
            .map_err(|e| CliError::Schema(format!("seed component {name}: {e}")))
    };
    let seed = [parse("P", &s.p)?, parse("Q", &s.q)?, parse("R", &s.r)?];
    let ball = ctx.doc.ball.as_ref().map_or(
        Ball {
            center: [0.0; 3],
            radius: 1.0,
        },
        |b| Ball {
            center: b.center,
            radius: b.radius,
        },
    );
    let plane = find_separating_plane(&seed, ball, ctx.args.seed)?;
    let tcfg = TuneConfig {
        seed: ctx.args.seed,
        ..TuneConfig::default()
    };
    let tuned = tune_lift_parameters(&plane.translated_seed(), &tcfg)?;
    let fam = &tuned.family;
    let [p, q, r] = fam.export();
    let (mut scaled, dilation) = normalize_scale(&fam.system)?;
    let mut l1_cubic = None;
    if let Some(t) = ctx.doc.lift.as_ref().and_then(|l| l.l1_target.as_deref()) {
        let target = parse_rational(t).expect("validated with the input document");
        let (sys, c) = retune_l1(&scaled, &target)?;
        scaled = sys;
        l1_cubic = Some(format!("R += ({c})*z^3"));
    }
    let [sp, sq, sr] = [0, 1, 2].map(|i| scaled.polys[i].to_expr().to_string());
    let lifted_input = InputDoc {
        system: SystemDoc { p: sp, q: sq, r: sr },
        perturbation: Some(PerturbationDoc::Simple { simple: true }),
        interval: Some([-0.5, 0.5]),
        parameters: None,
        tolerances: None,
        ball: None,
        lift: None,
    };
    let rep = LiftReport {
        seed: [s.p.clone(), s.q.clone(), s.r.clone()],
        l_star: tuned.l_star.to_string(),
        delta_star: tuned.delta_star.to_string(),
        degree: fam.degree,
        sqrt_delta: fam.sqrt_delta.to_string(),
        sqrt_exact: fam.sqrt_exact,
        field: fam.export_field(),
        characteristic_polynomial: fam.characteristic_polynomial().map(|c| c.to_string()),
        linear_residual: fam.linear_residual,
        l1_jitter: tuned.l1_jitter.clone(),
        criteria: tuned.criteria.clone(),
        a_fit: tuned.a_fit,
        a_limit_printed: tuned.a_limit_printed,
        b_linear_residual: tuned.b_linear_residual,
        omega_samples: tuned.samples.clone(),
        system: SystemDoc { p, q, r },
        dilation: dilation.to_string(),
        l1_cubic,
        plane,
        lifted_input: lifted_input.clone(),
    };
    let mut out = ctx.emit(&rep, None, EXIT_OK);
    out.extra.push(("lifted.json".into(), to_json(&lifted_input)));
    Ok(out)
}
