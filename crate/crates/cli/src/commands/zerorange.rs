use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use anyhow::{bail, Context};
use multitime::linalg::{c, loglog_slope};
use multitime::report::{csv_bytes, CheckOutcome};
use multitime::spacetime::{Hypersurface, SpacetimePoint};
use multitime::zerorange::{
    boost_covariance_check, boundary_condition_defect, current_conservation_residual, entanglement_purity,
    oracle_difference, random_spacelike_configs, slice_norm, surface_norm, InitialData2P, ProductTerm, SliceGrid,
    ZeroRangeModel,
};
use serde::Serialize;

use crate::args::{expand_checks, json_or_file, positive, ZerorangeArgs, ZerorangeCheck};
use crate::{Ctx, Outcome};

const EVERY: [ZerorangeCheck; 6] = [
    ZerorangeCheck::Unitarity,
    ZerorangeCheck::Boundary,
    ZerorangeCheck::Oracle,
    ZerorangeCheck::Current,
    ZerorangeCheck::Covariance,
    ZerorangeCheck::Entanglement,
];

#[derive(Serialize)]
struct Resolved {
    theta: f64,
    initial: String,
    surface: Option<Vec<[f64; 2]>>,
    grid_dz: f64,
    t_final: f64,
    checks: Vec<ZerorangeCheck>,
}

#[derive(Serialize)]
struct Row {
    quantity: &'static str,
    label: String,
    parameter: f64,
    value: f64,
}

fn row(quantity: &'static str, label: impl Into<String>, parameter: f64, value: f64) -> Row {
    Row { quantity, label: label.into(), parameter, value }
}

/// Packet centres of the first product term, used to place probes.
fn initial_data(spec: &str, theta: f64) -> anyhow::Result<(InitialData2P, f64, f64)> {
    if let Some(rest) = spec.strip_prefix("gaussian:") {
        let parts: Vec<f64> = rest.split(':').map(str::parse).collect::<Result<_, _>>().context("gaussian:<separation>:<width>")?;
        let [separation, width] = parts[..] else { bail!("gaussian:<separation>:<width> takes two numbers") };
        let spinor = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
        let data = InitialData2P::head_on(positive("separation", separation)?, positive("width", width)?, spinor, theta)?;
        return Ok((data, -0.5 * separation, 0.5 * separation));
    }
    let terms: Vec<ProductTerm> = json_or_file(spec, "initial product terms")?;
    let Some(first) = terms.first() else { bail!("initial data needs at least one product term") };
    let centres = (first.first.center, first.second.center);
    Ok((InitialData2P::packets(terms, theta)?, centres.0, centres.1))
}

pub fn run(args: &ZerorangeArgs, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let r = Resolved {
        theta: args.theta.unwrap_or(FRAC_PI_2),
        initial: args.initial.clone().unwrap_or_else(|| "gaussian:4:0.3".into()),
        surface: args.surface.as_deref().map(|s| json_or_file(s, "surface")).transpose()?,
        grid_dz: positive("grid-dz", args.grid_dz.unwrap_or(0.05))?,
        t_final: positive("t-final", args.t_final.unwrap_or(3.0))?,
        checks: expand_checks(
            args.check.as_deref().unwrap_or(&[ZerorangeCheck::All]),
            ZerorangeCheck::All,
            ZerorangeCheck::None,
            &EVERY,
        ),
    };
    let tol = &ctx.tol;
    let (data, c1, c2) = initial_data(&r.initial, r.theta)?;
    let (lo, hi) = data.support();
    let model = ZeroRangeModel::new(r.theta, data)?;
    let t = r.t_final;
    let window = (lo - t - 0.5, hi + t + 0.5);
    let grid = SliceGrid::covering(window.0, window.1, r.grid_dz);
    let times: Vec<f64> = (0..=4).map(|k| t * k as f64 / 4.0).collect();

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for check in &r.checks {
        match check {
            ZerorangeCheck::Unitarity => {
                let mut surfaces: Vec<(String, Hypersurface)> =
                    times.iter().map(|&s| (format!("t={s}"), Hypersurface::flat(s))).collect();
                match &r.surface {
                    Some(nodes) => surfaces.push(("custom".into(), Hypersurface::new(nodes.clone())?)),
                    None => {
                        // steepest tilt (up to 1/2) that stays above the initial slice
                        let slope = (0.9 * t / (hi - lo)).min(0.5);
                        surfaces.push(("tilted".into(), Hypersurface::tilted(0.5 * t, slope, lo, hi)?))
                    }
                }
                let mut worst = 0.0f64;
                for (label, s) in &surfaces {
                    let reach = s.time_range().1.max(0.0);
                    let n = surface_norm(&model, s, (lo - reach - 0.5, hi + reach + 0.5), ctx.exec);
                    worst = worst.max((n - 1.0).abs());
                    rows.push(row("surface-norm", label.clone(), s.time_range().1, n));
                }
                for &s in &times {
                    rows.push(row("slice-norm", "grid", s, slice_norm(&model.equal_time_slice(s, &grid, ctx.exec))));
                }
                checks.push(CheckOutcome::at_most("unitarity.max-norm-deviation", worst, tol.unitarity));
            }
            ZerorangeCheck::Boundary => {
                // centred where the packets meet; near t = 0 the relative
                // defect only sees the tails of the initial data
                let (mid, meet) = (0.5 * (c1 + c2), 0.5 * (c2 - c1).abs());
                let sweep: Vec<(f64, f64)> = (0..50)
                    .map(|k| {
                        let u = -1.0 + 2.0 * k as f64 / 49.0;
                        ((meet + u).max(0.05), mid + u)
                    })
                    .collect();
                let defect = boundary_condition_defect(&model, &sweep);
                rows.push(row("boundary-defect", "collision-sweep", 50.0, defect));
                checks.push(CheckOutcome::at_most("boundary.relative-defect", defect, tol.boundary));
            }
            ZerorangeCheck::Oracle => {
                let dzs = [r.grid_dz, r.grid_dz / 2.0, r.grid_dz / 4.0];
                let mut errs = Vec::new();
                for dz in dzs {
                    let e = oracle_difference(&model, &SliceGrid::covering(window.0, window.1, dz), t, ctx.exec)?;
                    rows.push(row("oracle-error", "dz", dz, e));
                    errs.push(e);
                }
                let slope = loglog_slope(&dzs, &errs);
                checks.push(CheckOutcome::at_most("oracle.order-deviation", (slope - 1.0).abs(), tol.order_band));
            }
            ZerorangeCheck::Current => {
                let s = c2 - c1;
                let x1 = SpacetimePoint::new(0.2 * s, c1 + 0.18 * s);
                let x2 = SpacetimePoint::new(0.13 * s, c2 - 0.15 * s);
                let hs = [0.02, 0.01, 0.005];
                let mut res = Vec::new();
                for h in hs {
                    let v = current_conservation_residual(&model, x1, x2, h)?;
                    rows.push(row("conservation-residual", "h", h, v));
                    res.push(v);
                }
                let slope = loglog_slope(&hs, &res);
                checks.push(CheckOutcome::at_most("current.order-deviation", (slope - 2.0).abs(), tol.order_band));
            }
            ZerorangeCheck::Covariance => {
                let configs = random_spacelike_configs(100, ctx.seed, (-1.0, t + 2.0), (lo, hi));
                let mut worst = 0.0f64;
                for beta in [0.1, 0.3, 0.6] {
                    let d = boost_covariance_check(&model, beta, &configs, ctx.exec)?;
                    rows.push(row("covariance-deviation", "rapidity", beta, d));
                    worst = worst.max(d);
                }
                checks.push(CheckOutcome::at_most("covariance.max-deviation", worst, tol.covariance));
            }
            ZerorangeCheck::Entanglement => {
                let mut last = 1.0;
                for &s in &times {
                    last = entanglement_purity(&model, s, &grid, ctx.exec);
                    rows.push(row("purity", "grid", s, last));
                }
                checks.push(CheckOutcome::at_most("entanglement.final-purity", last, tol.purity_max));
            }
            ZerorangeCheck::All | ZerorangeCheck::None => unreachable!("expanded"),
        }
    }
    Ok(Outcome { config: serde_json::to_value(&r)?, csv: csv_bytes(&rows)?, checks, report: args.report.clone() })
}
