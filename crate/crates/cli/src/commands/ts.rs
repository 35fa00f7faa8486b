use anyhow::bail;
use multitime::linalg::{c, norm};
use multitime::qft::{packet_state, FockFunction};
use multitime::report::{csv_bytes, CheckOutcome};
use multitime::tomonaga::{
    from_interaction_picture, uniform_path, DiscreteHypersurface, Scheme, SurfaceReference, TsEvolver,
};
use serde::Serialize;

use super::model::ResolvedModel;
use crate::args::{json_or_file, positive, TsArgs, TsScheme};
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct Resolved {
    model: ResolvedModel,
    path: Vec<Vec<f64>>,
    dt: f64,
    scheme: TsScheme,
    compare_multitime: bool,
}

/// One run along the path with every leg refined by `refinement`.
#[derive(Serialize)]
struct Row {
    refinement: usize,
    steps: usize,
    max_dt: f64,
    norm: f64,
    deviation: Option<f64>,
    composition_defect: Option<f64>,
}

fn defaults() -> ResolvedModel {
    ResolvedModel {
        sites: 8,
        spacing: 1.0,
        nmax: 2,
        g_re: [0.5, 0.0],
        g_im: [0.0, 0.5],
        mass_x: 1.0,
        mass_y: 0.5,
        cutoff: "delta".into(),
    }
}

fn leg_rounds(a: &DiscreteHypersurface, b: &DiscreteHypersurface, dt: f64) -> usize {
    let span = a.times.iter().zip(&b.times).map(|(x, y)| (y - x).abs()).fold(0.0, f64::max);
    ((span / dt).ceil() as usize).max(1)
}

pub fn run(args: &TsArgs, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let model_cfg = ResolvedModel::resolve(&args.model, defaults())?;
    let model = model_cfg.build()?;
    let lattice = *model.lattice();
    let flat = DiscreteHypersurface::flat(&lattice, 0.0);
    let mut path: Vec<Vec<f64>> = match args.path.as_deref() {
        Some(s) => json_or_file(s, "surface path")?,
        None => vec![DiscreteHypersurface::tent(&lattice, 1.0, 0.1)?.times],
    };
    // the interaction picture is anchored at t = 0
    if path.first() != Some(&flat.times) {
        path.insert(0, flat.times.clone());
    }
    if path.len() < 2 {
        bail!("the path needs at least one surface besides t = 0");
    }
    let r = Resolved {
        model: model_cfg,
        path,
        dt: positive("dt", args.dt.unwrap_or(0.18))?,
        scheme: args.scheme.unwrap_or(TsScheme::Euler),
        compare_multitime: args.compare_multitime.unwrap_or(false),
    };
    let surfaces: Vec<DiscreteHypersurface> =
        r.path.iter().map(|t| DiscreteHypersurface::new(&lattice, t.clone())).collect::<Result<_, _>>()?;
    let scheme = match r.scheme {
        TsScheme::Euler => Scheme::Euler,
        TsScheme::Midpoint => Scheme::Midpoint,
    };
    let (first, last) = (&surfaces[0], &surfaces[surfaces.len() - 1]);
    let intermediate = surfaces.len() > 2;

    let psi = packet_state(&model, r.model.sites / 4, 1.0, [c(0.8, 0.0), c(0.0, 0.6)], None);
    let evolver = TsEvolver::new(&model);
    let reference = if r.compare_multitime {
        Some(SurfaceReference::new(&FockFunction::new(&model, psi.clone()), last, 16, ctx.exec)?)
    } else {
        None
    };
    let refinements: &[usize] = if r.compare_multitime || intermediate { &[1, 2, 4] } else { &[1] };

    let mut rows = Vec::new();
    for &k in refinements {
        let mut steps = Vec::new();
        for pair in surfaces.windows(2) {
            steps.extend(uniform_path(&pair[0], &pair[1], k * leg_rounds(&pair[0], &pair[1], r.dt)));
        }
        let (psi_t, end) = evolver.run(&psi, first, &steps, scheme)?;
        let composition_defect = if intermediate {
            let direct = uniform_path(first, last, k * leg_rounds(first, last, r.dt));
            let (psi_d, _) = evolver.run(&psi, first, &direct, scheme)?;
            let a = from_interaction_picture(&model, &psi_t, &end);
            let b = from_interaction_picture(&model, &psi_d, &end);
            Some(a.max_abs_diff(&b))
        } else {
            None
        };
        rows.push(Row {
            refinement: k,
            steps: steps.len(),
            max_dt: steps.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max),
            norm: norm(&psi_t),
            deviation: reference.as_ref().map(|rf| rf.deviation(&model, &psi_t)),
            composition_defect,
        });
    }

    // The midpoint rule removes the first-order term and then sits on the
    // lattice floor from non-commuting neighbour densities, so only the
    // Euler scheme has a refinement rate to check.
    let mut checks = Vec::new();
    let ratio = |f: fn(&Row) -> Option<f64>| -> Option<f64> {
        let a = f(rows.first()?)?;
        let b = f(rows.last()?)?;
        Some(if a > 0.0 { b / a } else { 0.0 })
    };
    let euler = r.scheme == TsScheme::Euler;
    if let Some(q) = ratio(|r| r.deviation).filter(|_| euler) {
        checks.push(CheckOutcome::at_most("ts.deviation-refinement-ratio", q, ctx.tol.refinement_ratio));
    }
    if let Some(q) = ratio(|r| r.composition_defect).filter(|_| euler) {
        checks.push(CheckOutcome::at_most("ts.composition-refinement-ratio", q, ctx.tol.refinement_ratio));
    }
    Ok(Outcome { config: serde_json::to_value(&r)?, csv: csv_bytes(&rows)?, checks, report: args.report.clone() })
}
