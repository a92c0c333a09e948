use ddsys_core::hankel::{DataSet, Trajectory};
use ddsys_core::linalg::{eigenvalues, Matrix, Stability, ToleranceConfig};
use ddsys_core::lti::random::{matrix_with_spectrum, random_system, random_zd_spectrum, rng, SystemConstraints};
use ddsys_core::lti::{build_from_bif, DiscreteStateSpace};
use ddsys_core::signal::{mosaic_dataset, pe_dataset};
use ddsys_core::zerodyn::*;
use num_complex::Complex64;

struct Draw {
    sys: DiscreteStateSpace,
    r: Vec<usize>,
    q: Matrix,
    stable: bool,
}

fn draw(seed: u64) -> Draw {
    let mut g = rng(seed);
    let m = 1 + seed as usize % 2;
    let d = (seed as usize / 2) % 4;
    let n_max = 6;
    let r: Vec<usize> = (0..m).map(|i| 1 + (seed as usize / 8 + i) % ((n_max - d) / m).max(1)).collect();
    let stable = d == 0 || seed % 3 != 0;
    let spec = random_zd_spectrum(&mut g, d, stable, 0.05);
    let q = matrix_with_spectrum(&mut g, &spec);
    let c = SystemConstraints {
        minimal: true,
        relative_degree: Some(r.clone()),
        zero_dynamics: Some(q.clone()),
        ..Default::default()
    };
    let sys = random_system(d + r.iter().sum::<usize>(), m, m, &c, seed).unwrap();
    Draw { sys, r, q, stable }
}

fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let hit = (0..b.len()).filter(|&i| !used[i]).min_by(|&i, &j| (b[i] - x).norm().total_cmp(&(b[j] - x).norm()));
        match hit {
            Some(i) if (b[i] - x).norm() < tol => {
                used[i] = true;
                true
            }
            _ => false,
        }
    })
}

fn mosaic(sys: &DiscreteStateSpace, window: usize, seed: u64) -> DataSet {
    let order = window + sys.n();
    mosaic_dataset(sys, 4 * order * sys.m() + 20, order + 6, seed).unwrap()
}

#[test]
fn monte_carlo_spectra_and_verdicts() {
    let tol = ToleranceConfig::default();
    for seed in 0..40u64 {
        let Draw { sys, r, q, stable } = draw(seed);
        let n = sys.n();
        let lag = sys.lag(&tol).unwrap();
        let window = lag + r.iter().max().unwrap() + 1;
        let ds = mosaic(&sys, window, seed);
        let (qt, v) = qtilde(&ds, lag, &tol).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(v.ncols(), q.nrows(), "seed {seed}");
        assert!(same_multiset(&eigenvalues(&qt).unwrap(), &eigenvalues(&q).unwrap(), 1e-6), "seed {seed}");
        let oracle = sys.oracle_zero_dynamics_stable(&tol).unwrap();
        assert_eq!(oracle == Stability::Stable, stable);
        let z = zd_stability_pe(&ds, lag, n, &r, window, &tol).unwrap();
        assert_eq!(z, oracle, "seed {seed}");
        let v = algorithm2(&ds, lag, n, r.iter().sum(), &tol).unwrap();
        assert!(v.conditions.mcmillan_ok, "seed {seed}");
        assert_eq!(v.s, if stable { ZdSign::Stable } else { ZdSign::Unstable }, "seed {seed}");
    }
}

#[test]
fn dimension_mismatch_reported() {
    let tol = ToleranceConfig::default();
    let Draw { sys, r, .. } = draw(2);
    let lag = sys.lag(&tol).unwrap();
    let window = lag + r.iter().max().unwrap() + 1;
    let ds = mosaic(&sys, window, 5);
    let wrong = vec![r[0] + 1];
    assert!(matches!(
        zd_stability_pe(&ds, lag, sys.n(), &wrong, window + 1, &tol),
        Err(ddsys_core::error::Error::DimensionMismatchZd { .. })
    ));
}

#[test]
fn trivial_zero_dynamics() {
    let tol = ToleranceConfig::default();
    let m = |r: usize, c: usize, v: &[f64]| Matrix::from_row_slice(r, c, v);
    let sys = build_from_bif(&[2], &Matrix::zeros(0, 0), &Matrix::zeros(0, 1), &m(1, 2, &[-0.2, 0.1]), &m(1, 1, &[1.0])).unwrap();
    let ds = pe_dataset(&sys, 60, 8, 1, &tol).unwrap();
    let (qt, _) = qtilde(&ds, 2, &tol).unwrap();
    assert_eq!(qt.shape(), (0, 0));
    assert_eq!(zd_stability_pe(&ds, 2, 2, &[2], 5, &tol).unwrap(), Stability::Stable);
    assert_eq!(algorithm2(&ds, 2, 2, 2, &tol).unwrap().s, ZdSign::Stable);
    assert!(!reldeg_sum_informative(&ds, 2, 1, &tol).unwrap());
}

#[test]
fn impulse_only_data_fails_mcmillan() {
    let tol = ToleranceConfig::default();
    let m = |r: usize, c: usize, v: &[f64]| Matrix::from_row_slice(r, c, v);
    let sys = build_from_bif(&[1], &m(1, 1, &[0.5]), &m(1, 1, &[1.0]), &m(1, 2, &[0.3, 0.05]), &m(1, 1, &[1.0])).unwrap();
    // inputs start after the first lag samples, so every window begins at x = 0
    let seqs = (0..12)
        .map(|k| {
            let mut u = Matrix::zeros(5, 1);
            for t in 2..5 {
                u[(t, 0)] = ((k * 7 + t * 3) % 5) as f64 - 2.0;
            }
            let (y, _) = sys.simulate(&ddsys_core::linalg::Vector::zeros(2), &u).unwrap();
            Trajectory::new(u, y).unwrap()
        })
        .collect();
    let ds = DataSet::new(1, 1, seqs, None).unwrap();
    assert!(!mcmillan_condition(&ds, 2, 2, &tol).unwrap());
    assert_ne!(algorithm2(&ds, 2, 2, 1, &tol).unwrap().s, ZdSign::Stable);
}

#[test]
fn truncated_data_is_inconclusive() {
    let tol = ToleranceConfig::default();
    let m = |r: usize, c: usize, v: &[f64]| Matrix::from_row_slice(r, c, v);
    let sys = build_from_bif(&[1], &m(1, 1, &[0.5]), &m(1, 1, &[1.0]), &m(1, 2, &[0.3, 0.05]), &m(1, 1, &[1.0])).unwrap();
    let ds = pe_dataset(&sys, 60, 8, 3, &tol).unwrap();
    assert_eq!(algorithm2(&ds, 2, 2, 1, &tol).unwrap().s, ZdSign::Stable);
    let mut seen_zero = false;
    for len in (5..60).rev() {
        let short = ds.truncated(len).unwrap();
        let v = algorithm2(&short, 2, 2, 1, &tol).unwrap();
        assert_ne!(v.s, ZdSign::Unstable, "len {len}");
        if !v.conditions.mcmillan_ok && v.conditions.mpum_zd_stable == Stability::Stable {
            assert_eq!(v.s, ZdSign::Inconclusive);
            seen_zero = true;
        }
    }
    assert!(seen_zero);
}

#[test]
fn non_square_rejected() {
    let tol = ToleranceConfig::default();
    let ds = DataSet::single(Trajectory::new(Matrix::zeros(9, 1), Matrix::zeros(9, 2)).unwrap());
    assert!(algorithm2(&ds, 1, 1, 1, &tol).is_err());
}

#[test]
fn scaling_does_not_change_the_sign() {
    let tol = ToleranceConfig::default();
    for seed in [1u64, 3, 5] {
        let Draw { sys, r, .. } = draw(seed);
        let lag = sys.lag(&tol).unwrap();
        let ds = mosaic(&sys, lag + r.iter().max().unwrap() + 1, seed);
        let base = algorithm2(&ds, lag, sys.n(), r.iter().sum(), &tol).unwrap().s;
        for c in [1e-3, 1e3] {
            assert_eq!(algorithm2(&ds.scaled(c), lag, sys.n(), r.iter().sum(), &tol).unwrap().s, base);
        }
    }
}
