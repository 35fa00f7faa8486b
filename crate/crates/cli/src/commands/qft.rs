use anyhow::{bail, Context};
use multitime::fock::LatticeSpec;
use multitime::linalg::{c, loglog_slope, norm, C64};
use multitime::qft::{
    equal_time_reduction_check, multitime_equation_residual, packet_state, splitting_equivalence_residual,
    statistics_consistency_experiment, EmissionAbsorptionSpec, FockFunction, LatticePoint, QftModel, Slot, Statistics,
};
use multitime::report::{csv_bytes, CheckOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::ResolvedModel;
use crate::args::{expand_checks, json_or_file, positive, QftArgs, QftCheck};
use crate::{Ctx, Outcome};

const EVERY: [QftCheck; 4] = [QftCheck::Equations, QftCheck::Splitting, QftCheck::EqualTime, QftCheck::Statistics];

/// Residuals below this are exact zeros and carry no convergence order.
const DEGENERATE: f64 = 1e-13;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default)]
    x: Vec<(f64, usize, usize)>,
    #[serde(default)]
    y: Vec<(f64, usize, usize)>,
}

impl ConfigSpec {
    fn points(&self) -> (Vec<LatticePoint>, Vec<LatticePoint>) {
        let p = |v: &[(f64, usize, usize)]| v.iter().map(|&(t, s, k)| LatticePoint::new(t, s, k)).collect();
        (p(&self.x), p(&self.y))
    }

    fn label(&self) -> String {
        let x = self.x.iter().map(|(t, s, k)| format!("x({t},{s},{k})"));
        let y = self.y.iter().map(|(t, s, k)| format!("y({t},{s},{k})"));
        x.chain(y).collect::<Vec<_>>().join(";")
    }
}

#[derive(Serialize)]
struct Resolved {
    model: ResolvedModel,
    checks: Vec<QftCheck>,
    dt: f64,
    configs: Vec<ConfigSpec>,
}

#[derive(Serialize)]
struct Row {
    check: &'static str,
    config: String,
    slot: String,
    parameter: f64,
    value: f64,
}

fn defaults() -> ResolvedModel {
    ResolvedModel {
        sites: 8,
        spacing: 0.5,
        nmax: 2,
        g_re: [0.4, 0.0],
        g_im: [0.0, 0.3],
        mass_x: 0.7,
        mass_y: 0.3,
        cutoff: "gauss:0.5".into(),
    }
}

/// Equal-time configurations at `t = 0.5` spread over the ring.
fn default_configs(sites: usize) -> Vec<ConfigSpec> {
    let s = |k: usize| (k * sites / 8) % sites;
    vec![
        ConfigSpec { x: vec![(0.5, s(2), 0)], y: vec![(0.5, s(5), 1)] },
        ConfigSpec { x: vec![(0.5, s(1), 1)], y: vec![(0.5, s(4), 0), (0.5, s(6), 1)] },
        ConfigSpec { x: vec![(0.5, s(6), 1)], y: vec![] },
    ]
}

/// `n` equal-time configurations with one x-point and up to two y-points
/// on distinct sites, every y-point more than `reach` sites from the x-point.
fn random_configs(n: usize, lattice: &LatticeSpec, reach: usize, nmax: usize, seed: u64) -> anyhow::Result<Vec<ConfigSpec>> {
    let sites = lattice.sites;
    if sites < 2 * reach + 3 {
        bail!("the ring is too small for y-points outside the cutoff reach");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let ny = rng.gen_range(0..=nmax.min(2));
            let xs = rng.gen_range(0..sites);
            let x = vec![(0.5, xs, rng.gen_range(0..2))];
            let mut used = vec![xs];
            let y = (0..ny)
                .map(|_| loop {
                    let s = rng.gen_range(0..sites);
                    if !used.contains(&s) && lattice.offset(xs, s).unsigned_abs() > reach {
                        used.push(s);
                        return (0.5, s, rng.gen_range(0..2));
                    }
                })
                .collect();
            ConfigSpec { x, y }
        })
        .collect())
}

fn random_state(model: &QftModel, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..model.space.dim()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = norm(&v);
    v.iter().map(|z| z / n).collect()
}

pub fn run(args: &QftArgs, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let model_cfg = ResolvedModel::resolve(&args.model, defaults())?;
    // constructing the model first surfaces budget errors before any work
    let model = model_cfg.build()?;
    let configs = match args.configs.as_deref() {
        None => default_configs(model_cfg.sites),
        Some(s) if s.starts_with("random:") => {
            let n: usize = s["random:".len()..].parse().context("random:<n>")?;
            random_configs(n, model.lattice(), model.cutoff.reach(), model_cfg.nmax, ctx.seed)?
        }
        Some(s) => json_or_file(s, "configuration list")?,
    };
    let r = Resolved {
        checks: expand_checks(args.check.as_deref().unwrap_or(&[QftCheck::All]), QftCheck::All, QftCheck::None, &EVERY),
        dt: positive("dt", args.dt.unwrap_or(0.04))?,
        model: model_cfg,
        configs,
    };
    let tol = &ctx.tol;
    let lattice = *model.lattice();
    let modes = lattice.modes();
    let packet = packet_state(&model, r.model.sites / 4, 0.6, [c(0.8, 0.0), c(0.0, 0.6)], Some((modes / 2 + 1) % modes));
    let phi = FockFunction::new(&model, packet);

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for check in &r.checks {
        match check {
            QftCheck::Equations => {
                let dts = [r.dt, r.dt / 2.0, r.dt / 4.0];
                let mut worst = 0.0f64;
                for cfg in &r.configs {
                    let (xs, ys) = cfg.points();
                    let slots = (0..xs.len()).map(Slot::X).chain((0..ys.len()).map(Slot::Y));
                    for slot in slots {
                        let name = match slot {
                            Slot::X(j) => format!("x{j}"),
                            Slot::Y(k) => format!("y{k}"),
                        };
                        let mut res = Vec::new();
                        for dt in dts {
                            let v = multitime_equation_residual(&phi, &xs, &ys, slot, dt)
                                .with_context(|| format!("configuration {}", cfg.label()))?;
                            rows.push(Row { check: "equations", config: cfg.label(), slot: name.clone(), parameter: dt, value: v });
                            res.push(v);
                        }
                        if res.iter().cloned().fold(0.0, f64::max) > DEGENERATE {
                            worst = worst.max((loglog_slope(&dts, &res) - 2.0).abs());
                        }
                    }
                }
                checks.push(CheckOutcome::at_most("equations.order-deviation", worst, tol.order_band));
            }
            QftCheck::Splitting => {
                let reach = model.cutoff.reach() as isize;
                let mut outside = 0.0f64;
                for cfg in &r.configs {
                    let (xs, ys) = cfg.points();
                    let v = splitting_equivalence_residual(&phi, &xs, &ys)
                        .with_context(|| format!("configuration {}", cfg.label()))?;
                    let separated =
                        xs.iter().all(|x| ys.iter().all(|y| lattice.offset(x.site, y.site).abs() > reach));
                    let slot = if separated { "outside-cutoff" } else { "inside-cutoff" };
                    rows.push(Row { check: "splitting", config: cfg.label(), slot: slot.into(), parameter: 0.0, value: v });
                    if separated {
                        outside = outside.max(v);
                    }
                }
                checks.push(CheckOutcome::at_most("splitting.outside-cutoff", outside, tol.exact));
            }
            QftCheck::EqualTime => {
                let state = FockFunction::new(&model, random_state(&model, ctx.seed));
                let mut worst = 0.0f64;
                for t in [0.25, 0.5, 1.0] {
                    let v = equal_time_reduction_check(&state, t, ctx.exec)?;
                    rows.push(Row { check: "equal-time", config: "random-state".into(), slot: "all".into(), parameter: t, value: v });
                    worst = worst.max(v);
                }
                checks.push(CheckOutcome::at_most("equal-time.max-deviation", worst, tol.equal_time));
            }
            QftCheck::Statistics => {
                let spec = EmissionAbsorptionSpec { lattice, coupling: model.coupling, cutoff: model.cutoff.clone() };
                let out = statistics_consistency_experiment(&spec, &Statistics::ALL, tol.statistics, 1e-2, ctx.exec)?;
                for o in out {
                    let witness: Vec<String> = o
                        .witness_x
                        .iter()
                        .map(|(t, s, k)| format!("x({t},{s},{k})"))
                        .chain(o.witness_y.iter().map(|(t, s, k)| format!("y({t},{s},{k})")))
                        .collect();
                    rows.push(Row {
                        check: "statistics",
                        config: witness.join(";"),
                        slot: o.variant.label().into(),
                        parameter: 1e-2,
                        value: o.max_residual,
                    });
                    let name = format!("statistics.{}", o.variant.label());
                    checks.push(match o.variant {
                        // odd fermion-number statistics must visibly break consistency
                        Statistics::YFermionic => CheckOutcome::at_least(name, o.max_residual, 10.0 * tol.statistics),
                        _ => CheckOutcome::at_most(name, o.max_residual, tol.statistics),
                    });
                }
            }
            QftCheck::All | QftCheck::None => unreachable!("expanded"),
        }
    }
    Ok(Outcome { config: serde_json::to_value(&r)?, csv: csv_bytes(&rows)?, checks, report: args.report.clone() })
}
