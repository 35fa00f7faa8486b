use multitime::born::smooth_distribution;
use multitime::fock::{truncated_dimension, FockSpace, FreePropagator, LatticeSpec};
use multitime::linalg::{c, norm, C64};
use multitime::report::{csv_bytes, CheckOutcome, Manifest};
use proptest::prelude::*;
use serde::{Deserialize, Serialize};

const CELLS: usize = 48;

/// Distribution supported more than the kernel reach away from both edges.
fn interior(particles: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 20usize.pow(particles as u32)).prop_map(move |inner| {
        let mut p = vec![0.0; CELLS.pow(particles as u32)];
        for (k, v) in inner.into_iter().enumerate() {
            let (i, j) = if particles == 1 { (k, 0) } else { (k / 20, k % 20) };
            let idx = if particles == 1 { 14 + i } else { (14 + i) * CELLS + 14 + j };
            p[idx] = v;
        }
        p
    })
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Rec {
    label: String,
    value: f64,
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothing_keeps_interior_mass(p in interior(1), sigma in 0.1..2.5f64) {
        let s = smooth_distribution(&p, 1, CELLS, sigma);
        let (a, b): (f64, f64) = (p.iter().sum(), s.iter().sum());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(s.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn smoothing_two_particles_commutes_with_exchange(p in interior(2), sigma in 0.1..2.5f64) {
        let swap = |q: &[f64]| -> Vec<f64> {
            (0..CELLS * CELLS).map(|k| q[(k % CELLS) * CELLS + k / CELLS]).collect()
        };
        let a = swap(&smooth_distribution(&p, 2, CELLS, sigma));
        let b = smooth_distribution(&swap(&p), 2, CELLS, sigma);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-14);
        }
        let mass: f64 = p.iter().sum();
        prop_assert!((a.iter().sum::<f64>() - mass).abs() <= 1e-11 * mass.max(1.0));
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec(("[ -~\n\"]{0,12}", -1e6..1e6f64), 0..8)) {
        let recs: Vec<Rec> = rows.into_iter().map(|(label, value)| Rec { label, value }).collect();
        let bytes = csv_bytes(&recs).unwrap();
        let back: Vec<Rec> = csv::Reader::from_reader(bytes.as_slice()).deserialize().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(back, recs);
    }

    #[test]
    fn manifest_passes_iff_every_check_passes(values in prop::collection::vec(0.0..2.0f64, 0..6)) {
        let checks: Vec<CheckOutcome> =
            values.iter().enumerate().map(|(i, &v)| CheckOutcome::at_most(format!("c{i}"), v, 1.0)).collect();
        let m = Manifest::new("prop", serde_json::Value::Null, checks, 0.0);
        prop_assert_eq!(m.passed, values.iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn ring_offsets_invert_shifts(sites in 2usize..32, i in 0usize..32, j in 0usize..32) {
        let l = LatticeSpec::new(sites, 0.5, true).unwrap();
        let (i, j) = (i % sites, j % sites);
        let d = l.offset(i, j);
        prop_assert_eq!(l.shift(i, d), Some(j));
        prop_assert!(2 * d.unsigned_abs() <= sites);
        prop_assert_eq!(l.distance(i, j), l.distance(j, i));
    }

    #[test]
    fn free_propagation_is_unitary(
        sites in 2usize..10,
        mass in 0.0..2.0f64,
        t in -3.0..3.0f64,
        re in prop::collection::vec(-1.0..1.0f64, 20),
        im in prop::collection::vec(-1.0..1.0f64, 20),
    ) {
        let l = LatticeSpec::new(sites, 0.7, true).unwrap();
        let v: Vec<C64> = (0..l.modes()).map(|k| c(re[k], im[k])).collect();
        let out = FreePropagator::new(&l, mass).apply(t, &v);
        prop_assert!((norm(&out) - norm(&v)).abs() < 1e-10 * norm(&v).max(1.0));
    }

    #[test]
    fn fock_dimension_matches_count(sites in 2usize..5, nmax in 0usize..3) {
        let l = LatticeSpec::new(sites, 1.0, true).unwrap();
        let space = FockSpace::new(l, &[0, 1], nmax).unwrap();
        prop_assert_eq!(space.dim(), truncated_dimension(&l, &[0, 1], nmax));
        for (k, s) in space.states().iter().enumerate() {
            prop_assert_eq!(space.index_of(s), Some(k));
        }
    }
}
