use super::*;
use crate::exec::Exec;
use crate::fock::{CouplingSpec, CutoffProfile, FockSpace, FreePropagator, LatticeSpec};
use crate::linalg::{c, C64, ZERO};

fn model(l: usize, x_counts: &[usize], n_max: usize, g: f64, radius: f64) -> QftModel {
    let lat = LatticeSpec::new(l, 0.5, true).unwrap();
    let space = FockSpace::new(lat, x_counts, n_max).unwrap();
    let coupling = CouplingSpec { g: [c(g, 0.0), c(0.0, 0.6 * g)], mass_x: 0.7, mass_y: 0.3 };
    let cutoff = if radius == 0.0 { CutoffProfile::delta(&lat) } else { CutoffProfile::gaussian(&lat, radius).unwrap() };
    QftModel::new(space, coupling, cutoff).unwrap()
}

fn random_state(m: &QftModel, seed: u64) -> Vec<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..m.space.dim()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = crate::linalg::norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

fn p(t: f64, mode: usize) -> LatticePoint {
    LatticePoint::new(t, mode / 2, mode % 2)
}

#[test]
fn time_zero_amplitudes_match_coefficients() {
    let m = model(2, &[0, 1, 2], 2, 0.5, 0.0);
    let psi = random_state(&m, 3);
    let phi = FockFunction::new(&m, psi.clone());
    for (xm, ym) in [(vec![1], vec![]), (vec![2, 0], vec![3]), (vec![0, 3], vec![1, 1]), (vec![], vec![2, 0])] {
        let xs: Vec<_> = xm.iter().map(|&q| p(0.0, q)).collect();
        let ys: Vec<_> = ym.iter().map(|&q| p(0.0, q)).collect();
        let got = phi.eval(&xs, &ys).unwrap();
        let expect = m.position_amplitude(&psi, &xm, &ym);
        assert!((got - expect).norm() < 1e-14, "{xm:?} {ym:?}: {got} vs {expect}");
        assert!(expect.norm() > 1e-3);
    }
    assert!(phi.eval(&[p(0.0, 0)], &[p(0.0, 1), p(0.0, 2), p(0.0, 3)]).is_err());
}

#[test]
fn permutation_symmetry_at_equal_times() {
    let m = model(3, &[0, 1, 2], 2, 0.5, 0.0);
    let psi = random_state(&m, 4);
    let phi = FockFunction::new(&m, psi);
    let t = 0.4;
    let (x1, x2, y1, y2) = (p(t, 0), p(t, 3), p(t, 4), p(t, 1));
    let a = phi.eval(&[x1, x2], &[y1, y2]).unwrap();
    let b = phi.eval(&[x2, x1], &[y1, y2]).unwrap();
    let cc = phi.eval(&[x1, x2], &[y2, y1]).unwrap();
    assert!(a.norm() > 1e-3);
    assert!((a + b).norm() < 1e-13 && (a - cc).norm() < 1e-13);
}

#[test]
fn free_model_factorizes_into_propagators() {
    let m = model(3, &[0, 1], 1, 0.0, 0.0);
    let psi = random_state(&m, 5);
    let phi = FockFunction::new(&m, psi.clone());
    let lat = *m.lattice();
    let ux = FreePropagator::new(&lat, 0.7).matrix(0.6);
    let uy = FreePropagator::new(&lat, 0.3).matrix(-0.25);
    let modes = lat.modes();
    for (q, r) in [(0, 1), (3, 5), (4, 4)] {
        let got = phi.eval(&[p(0.6, q)], &[p(-0.25, r)]).unwrap();
        let mut expect = ZERO;
        for q2 in 0..modes {
            for r2 in 0..modes {
                expect += ux[(q, q2)] * uy[(r, r2)] * m.position_amplitude(&psi, &[q2], &[r2]);
            }
        }
        assert!((got - expect).norm() < 1e-11, "{got} {expect}");
    }
}

#[test]
fn equal_time_reduction_is_exact() {
    let m = model(4, &[0, 1], 2, 0.5, 0.0);
    let phi = FockFunction::new(&m, random_state(&m, 6));
    assert!(equal_time_reduction_check(&phi, 0.0, Exec::Sequential).unwrap() < 1e-15);
    let d = equal_time_reduction_check(&phi, 0.5, Exec::Parallel).unwrap();
    assert!(d < 1e-11, "{d}");
}

#[test]
fn equations_hold_to_second_order_outside_cutoff() {
    let m = model(8, &[0, 1], 2, 0.5, 0.0);
    let psi = packet_state(&m, 2, 0.6, [c(0.8, 0.0), c(0.0, 0.6)], None);
    let phi = FockFunction::new(&m, psi);
    let t = 0.5;
    let xs = [p(t, 5)];
    let ys = [p(t, 10)];
    for slot in [Slot::X(0), Slot::Y(0)] {
        let r: Vec<f64> =
            [0.02, 0.01].iter().map(|dt| multitime_equation_residual(&phi, &xs, &ys, slot, *dt).unwrap()).collect();
        let ratio = r[0] / r[1];
        assert!((ratio - 4.0).abs() < 0.3, "{slot:?} {r:?}");
    }
    assert_eq!(splitting_equivalence_residual(&phi, &xs, &ys).unwrap(), 0.0);
    // same site: inside the cutoff the two attributions differ
    assert!(splitting_equivalence_residual(&phi, &xs, &[p(t, 4)]).unwrap() > 1e-3);
    assert!(multitime_equation_residual(&phi, &xs, &[p(t, 4)], Slot::X(0), 0.01).is_err());
}

fn spec(g: f64) -> EmissionAbsorptionSpec {
    let lattice = LatticeSpec::new(24, 0.25, true).unwrap();
    EmissionAbsorptionSpec {
        lattice,
        coupling: CouplingSpec { g: [c(g, 0.0), c(0.0, 0.5 * g)], mass_x: 0.5, mass_y: 0.5 },
        cutoff: CutoffProfile::gaussian(&lattice, 0.5).unwrap(),
    }
}

#[test]
fn commutator_vanishes_for_free_model() {
    let s = spec(0.0);
    let probe = ProbeFockFunction::standard(s.lattice, Statistics::YFermionic);
    let (xs, ys) = (vec![p(0.1, 3), p(0.3, 20)], vec![p(0.0, 30)]);
    assert!(qft_commutator_check(&s, &probe, &xs, &ys, 1e-2).unwrap() < 1e-9);
}

#[test]
fn statistics_rule() {
    let out = statistics_consistency_experiment(&spec(0.8), &Statistics::ALL, 1e-6, 1e-2, Exec::Parallel).unwrap();
    for o in &out {
        match o.variant {
            Statistics::YFermionic => assert!(o.max_residual > 1e-5, "{o:?}"),
            _ => assert!(o.passed, "{o:?}"),
        }
    }
}
