use multitime::consistency::{commutator_convergence, standard_base_points, MultiTimeOperatorSpec, TestFunctionBundle};
use multitime::fock::{CouplingSpec, CutoffProfile, LatticeSpec};
use multitime::linalg::c;
use multitime::qft::{qft_commutator_check, statistics_sweep, EmissionAbsorptionSpec, ProbeFockFunction, Statistics};
use multitime::report::{csv_bytes, CheckOutcome};
use serde::Serialize;

use crate::args::{positive, ConsistencyArgs, ConsistencyModel};
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct Resolved {
    model: ConsistencyModel,
    h: f64,
}

/// `h = 0` marks the Richardson limit of the three finite-difference rows
/// above it.
#[derive(Serialize)]
struct Row {
    base_config: String,
    h: f64,
    residual: f64,
}

fn continuum_pair(model: ConsistencyModel) -> (MultiTimeOperatorSpec, MultiTimeOperatorSpec) {
    match model {
        ConsistencyModel::Free => (MultiTimeOperatorSpec::free(0, 0.5), MultiTimeOperatorSpec::free(1, 1.0)),
        _ => (MultiTimeOperatorSpec::smoothed_coulomb(0, 0.3), MultiTimeOperatorSpec::smoothed_coulomb(1, 0.7)),
    }
}

pub fn run(args: &ConsistencyArgs, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let r = Resolved { model: args.model.unwrap_or(ConsistencyModel::Free), h: positive("h", args.h.unwrap_or(2e-2))? };
    let tol = &ctx.tol;
    let mut rows = Vec::new();
    let checks = match r.model {
        ConsistencyModel::Free | ConsistencyModel::PairPotential => {
            let (a, b) = continuum_pair(r.model);
            let mut extreme = if r.model == ConsistencyModel::Free { 0.0f64 } else { f64::INFINITY };
            for base in standard_base_points() {
                let label = format!("({},{});({},{})", base[0].t, base[0].z, base[1].t, base[1].z);
                let report = commutator_convergence(&a, &b, &TestFunctionBundle::standard(vec![base]), r.h)?;
                for (h, res) in report.steps.iter().zip(report.residuals) {
                    rows.push(Row { base_config: label.clone(), h: *h, residual: res });
                }
                rows.push(Row { base_config: label, h: 0.0, residual: report.limit.abs() });
                extreme = if r.model == ConsistencyModel::Free {
                    extreme.max(report.limit.abs())
                } else {
                    extreme.min(report.limit.abs())
                };
            }
            if r.model == ConsistencyModel::Free {
                vec![CheckOutcome::at_most("free.commutator-limit", extreme, tol.commutator_zero)]
            } else {
                // the no-go statement: an interacting pair potential cannot be consistent
                vec![CheckOutcome::at_least("pair-potential.commutator-limit", extreme, tol.commutator_nonzero)]
            }
        }
        ConsistencyModel::Qft => {
            let lattice = LatticeSpec::new(24, 0.25, true)?;
            let spec = EmissionAbsorptionSpec {
                lattice,
                coupling: CouplingSpec { g: [c(0.8, 0.0), c(0.0, 0.4)], mass_x: 0.5, mass_y: 0.5 },
                cutoff: CutoffProfile::gaussian(&lattice, 0.5)?,
            };
            let probe = ProbeFockFunction::standard(lattice, Statistics::YBosonic);
            let mut worst = 0.0f64;
            for (xs, ys) in statistics_sweep(&spec, 2) {
                let label: Vec<String> = xs
                    .iter()
                    .map(|p| format!("x({},{},{})", p.t, p.site, p.spin))
                    .chain(ys.iter().map(|p| format!("y({},{},{})", p.t, p.site, p.spin)))
                    .collect();
                let label = label.join(";");
                for h in [r.h, r.h / 2.0, r.h / 4.0] {
                    let res = qft_commutator_check(&spec, &probe, &xs, &ys, h)?;
                    worst = worst.max(res);
                    rows.push(Row { base_config: label.clone(), h, residual: res });
                }
            }
            vec![CheckOutcome::at_most("qft.max-commutator", worst, tol.statistics)]
        }
    };
    Ok(Outcome { config: serde_json::to_value(&r)?, csv: csv_bytes(&rows)?, checks, report: args.report.clone() })
}
