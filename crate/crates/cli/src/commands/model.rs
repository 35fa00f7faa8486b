use anyhow::{bail, Context};
use multitime::fock::{CouplingSpec, CutoffProfile, FockSpace, LatticeSpec};
use multitime::linalg::c;
use multitime::qft::QftModel;
use serde::Serialize;

use crate::args::{positive, ModelArgs};

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedModel {
    pub sites: usize,
    pub spacing: f64,
    pub nmax: usize,
    pub g_re: [f64; 2],
    pub g_im: [f64; 2],
    pub mass_x: f64,
    pub mass_y: f64,
    pub cutoff: String,
}

fn pair(v: &Option<Vec<f64>>, default: [f64; 2], name: &str) -> anyhow::Result<[f64; 2]> {
    match v.as_deref() {
        None => Ok(default),
        Some(&[a, b]) => Ok([a, b]),
        Some(other) => bail!("--{name} takes two comma-separated numbers, got {}", other.len()),
    }
}

impl ResolvedModel {
    pub fn resolve(args: &ModelArgs, defaults: ResolvedModel) -> anyhow::Result<Self> {
        Ok(ResolvedModel {
            sites: args.sites.unwrap_or(defaults.sites),
            spacing: positive("spacing", args.spacing.unwrap_or(defaults.spacing))?,
            nmax: args.nmax.unwrap_or(defaults.nmax),
            g_re: pair(&args.g_re, defaults.g_re, "g-re")?,
            g_im: pair(&args.g_im, defaults.g_im, "g-im")?,
            mass_x: args.mass_x.unwrap_or(defaults.mass_x),
            mass_y: args.mass_y.unwrap_or(defaults.mass_y),
            cutoff: args.cutoff.clone().unwrap_or(defaults.cutoff),
        })
    }

    pub fn lattice(&self) -> anyhow::Result<LatticeSpec> {
        Ok(LatticeSpec::new(self.sites, self.spacing, true)?)
    }

    pub fn coupling(&self) -> CouplingSpec {
        CouplingSpec {
            g: [c(self.g_re[0], self.g_im[0]), c(self.g_re[1], self.g_im[1])],
            mass_x: self.mass_x,
            mass_y: self.mass_y,
        }
    }

    pub fn cutoff_profile(&self, lattice: &LatticeSpec) -> anyhow::Result<CutoffProfile> {
        if self.cutoff == "delta" {
            return Ok(CutoffProfile::delta(lattice));
        }
        let Some(r) = self.cutoff.strip_prefix("gauss:") else {
            bail!("--cutoff must be `delta` or `gauss:<radius>`, got `{}`", self.cutoff)
        };
        let r: f64 = r.parse().with_context(|| format!("cutoff radius `{r}`"))?;
        Ok(CutoffProfile::gaussian(lattice, r)?)
    }

    /// Sectors with zero or one x-particle and up to `nmax` y-particles.
    /// Fails with a budget error when the space is too large.
    pub fn build(&self) -> anyhow::Result<QftModel> {
        let lattice = self.lattice()?;
        let space = FockSpace::new(lattice, &[0, 1], self.nmax)?;
        Ok(QftModel::new(space, self.coupling(), self.cutoff_profile(&lattice)?)?)
    }
}
