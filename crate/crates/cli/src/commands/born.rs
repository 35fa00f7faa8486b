use anyhow::bail;
use multitime::born::{build_schedule, iterated_collapse_distribution, refinement_study, Dynamics, OverlapPolicy};
use multitime::linalg::c;
use multitime::report::{csv_bytes, CheckOutcome};
use multitime::spacetime::Hypersurface;
use multitime::zerorange::{InitialData2P, Packet, SliceGrid, ZeroRangeModel};
use serde::Serialize;

use crate::args::{json_or_file, positive, BornArgs, BornDynamics, Overlap};
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct Resolved {
    dynamics: BornDynamics,
    surface: Vec<[f64; 2]>,
    eps: f64,
    refinements: usize,
    grid_dz: f64,
    resolution: f64,
    overlap: Overlap,
    theta: f64,
}

fn default_surface(d: BornDynamics) -> Vec<[f64; 2]> {
    match d {
        BornDynamics::Free1 => vec![[-3.0, 0.5], [3.0, 3.5]],
        // flat over each packet, at different heights on the two sides
        BornDynamics::Bloch2 => vec![[-10.0, 1.0], [-1.5, 1.0], [1.5, 2.0], [10.0, 2.0]],
        BornDynamics::Zerorange => vec![[-2.0, 3.0], [2.0, 4.0]],
    }
}

fn dynamics(d: BornDynamics, theta: f64) -> anyhow::Result<Dynamics> {
    let spinor = [c(0.8, 0.0), c(0.0, 0.6)];
    Ok(match d {
        BornDynamics::Free1 => Dynamics::Free1 { packet: Packet::new(0.0, 1.0, 0.0, spinor), rapidity: None },
        BornDynamics::Bloch2 => {
            Dynamics::Bloch2 { first: Packet::new(-4.5, 0.5, 0.0, spinor), second: Packet::new(4.5, 0.5, 0.0, spinor) }
        }
        BornDynamics::Zerorange => {
            Dynamics::ZeroRange(ZeroRangeModel::new(theta, InitialData2P::head_on(4.0, 0.3, spinor, theta)?)?)
        }
    })
}

pub fn run(args: &BornArgs, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let kind = args.dynamics.unwrap_or(BornDynamics::Free1);
    let r = Resolved {
        dynamics: kind,
        surface: match args.surface.as_deref() {
            Some(s) => json_or_file(s, "surface")?,
            None => default_surface(kind),
        },
        eps: positive("eps", args.eps.unwrap_or(0.2))?,
        refinements: args.refinements.unwrap_or(3),
        grid_dz: positive("grid-dz", args.grid_dz.unwrap_or(if kind == BornDynamics::Free1 { 0.0125 } else { 0.05 }))?,
        resolution: args.resolution.unwrap_or(0.25),
        overlap: args.overlap.unwrap_or(Overlap::ExtendLater),
        theta: args.theta.unwrap_or(0.7),
    };
    if r.refinements == 0 {
        bail!("--refinements must be at least 1");
    }
    if r.resolution < 0.0 {
        bail!("--resolution must be nonnegative");
    }
    let surface = Hypersurface::new(r.surface.clone())?;
    let d = dynamics(kind, r.theta)?;
    let grid = SliceGrid::covering(-10.0, 10.0, r.grid_dz);
    let policy = match r.overlap {
        Overlap::ExtendLater => OverlapPolicy::ExtendLater,
        Overlap::ExtendEarlier => OverlapPolicy::ExtendEarlier,
    };
    let rows = refinement_study(&d, &surface, grid, r.eps, r.refinements, r.resolution, policy, ctx.exec)?;

    let tol = &ctx.tol;
    let mut checks = Vec::new();
    if rows.len() > 1 {
        let increases = rows.windows(2).filter(|w| w[1].tv_distance >= w[0].tv_distance).count();
        checks.push(CheckOutcome::at_most("born.tv-increases-under-refinement", increases as f64, 0.0));
    }
    let finest = rows.last().expect("at least one refinement");
    let tv_tol = if d.particles() == 1 { tol.born_tv_one } else { tol.born_tv_two };
    checks.push(CheckOutcome::at_most("born.finest-tv", finest.tv_distance, tv_tol));
    let mass = rows.iter().map(|r| (r.total_probability - 1.0).abs()).fold(0.0, f64::max);
    checks.push(CheckOutcome::at_most("born.total-probability-deviation", mass, tol.born_mass));
    if kind == BornDynamics::Bloch2 {
        let schedule = build_schedule(&surface, finest.eps, grid, policy)?;
        let dist = iterated_collapse_distribution(&d, &schedule, ctx.exec)?;
        checks.push(CheckOutcome::at_most("born.mutual-information", dist.mutual_information(4), tol.mutual_information));
    }
    Ok(Outcome { config: serde_json::to_value(&r)?, csv: csv_bytes(&rows)?, checks, report: args.report.clone() })
}
