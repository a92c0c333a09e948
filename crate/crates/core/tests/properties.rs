use ddsys_core::hankel::{hankel, is_persistently_exciting, DataSet, GeneratorSubspace, Trajectory};
use ddsys_core::linalg::*;
use ddsys_core::lti::random::{matrix_with_spectrum, random_matrix, random_system, random_transform, rng, SystemConstraints};
use ddsys_core::lti::{ContinuousStateSpace, RelDeg};
use ddsys_core::mpum::{mpum_extended, mpum_generators, unique_continuation};
use ddsys_core::reldeg::*;
use ddsys_core::signal::{pe_dataset, simulate_trajectory, uniform_input};
use ddsys_core::zerodyn::algorithm2;
use num_complex::Complex64;
use proptest::prelude::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn vec_of(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn rank_plus_nullity(r in 1usize..12, c in 1usize..12, k in 0usize..6, seed in any::<u64>()) {
        let mut g = rng(seed);
        let m = random_matrix(&mut g, r, k, 1.0) * random_matrix(&mut g, k, c, 1.0);
        let rank = numerical_rank(&m, &tol());
        prop_assert_eq!(rank, k.min(r).min(c));
        prop_assert_eq!(rank + kernel_basis(&m, &tol()).ncols(), c);
        let d = svd(&m);
        let back = &d.u * Matrix::from_diagonal(&Vector::from_vec(d.s.clone())) * &d.vt;
        prop_assert!((back - &m).norm() <= 1e-12 * m.norm().max(1.0));
    }

    #[test]
    fn constructed_rank_large(k in 1usize..20, seed in any::<u64>()) {
        let mut g = rng(seed);
        let m = random_matrix(&mut g, 50, k, 1.0) * random_matrix(&mut g, k, 40, 1.0);
        prop_assert_eq!(numerical_rank(&m, &tol()), k);
    }

    #[test]
    fn image_vectors_are_members(r in 1usize..10, c in 1usize..8, seed in any::<u64>()) {
        let mut g = rng(seed);
        let gm = random_matrix(&mut g, r, c, 1.0);
        let x = random_matrix(&mut g, c, 1, 3.0);
        prop_assert!(in_span(&vec_of(&(&gm * x)), &gm, &tol()).unwrap());
    }

    #[test]
    fn schur_verdict_similarity_invariant(n in 1usize..6, seed in any::<u64>()) {
        let mut g = rng(seed);
        let eigs: Vec<Complex64> = (0..n).map(|_| Complex64::new(ddsys_core::lti::random::uniform(&mut g, -1.6, 1.6), 0.0)).collect();
        prop_assume!(eigs.iter().all(|z| (z.norm() - 1.0).abs() > 1e-3));
        let a = Matrix::from_diagonal(&Vector::from_iterator(n, eigs.iter().map(|z| z.re)));
        let t = random_transform(&mut g, n, 1e3);
        let b = &t * &a * t.clone().try_inverse().unwrap();
        prop_assert_eq!(is_schur_stable(&a, &tol()).unwrap(), is_schur_stable(&b, &tol()).unwrap());
    }

    #[test]
    fn hankel_shift_structure(len in 3usize..25, d in 1usize..4, depth in 1usize..6, seed in any::<u64>()) {
        prop_assume!(depth <= len);
        let w = uniform_input(d, len, seed);
        let h = hankel(&w, depth).unwrap();
        prop_assert_eq!(h.shape(), (depth * d, len - depth + 1));
        for c in 0..h.ncols() {
            for t in 0..depth {
                for ch in 0..d {
                    prop_assert_eq!(h[(t * d + ch, c)], w[(c + t, ch)]);
                }
            }
            if c + 1 < h.ncols() {
                let tail = h.view((d, c), ((depth - 1) * d, 1));
                let head = h.view((0, c + 1), ((depth - 1) * d, 1));
                prop_assert_eq!(tail.into_owned(), head.into_owned());
            }
        }
    }

    #[test]
    fn pe_is_monotone(m in 1usize..3, order in 1usize..8, seed in any::<u64>()) {
        let len = (m + 1) * order + 6;
        let u = uniform_input(m, len, seed);
        let ds = DataSet::single(Trajectory::new(u, Matrix::zeros(len, 0)).unwrap());
        if is_persistently_exciting(&ds, order, &tol()).unwrap() {
            for lower in 1..order {
                prop_assert!(is_persistently_exciting(&ds, lower, &tol()).unwrap());
            }
        }
    }

    #[test]
    fn simulation_is_linear(n in 1usize..5, m in 1usize..3, p in 1usize..3, seed in any::<u64>()) {
        let sys = random_system(n, m, p, &SystemConstraints { feedthrough: true, max_spectral_radius: Some(0.9), ..Default::default() }, seed).unwrap();
        let mut g = rng(seed ^ 7);
        let x0 = Vector::from_column_slice(random_matrix(&mut g, n, 1, 1.0).as_slice());
        let u1 = random_matrix(&mut g, 15, m, 1.0);
        let u2 = random_matrix(&mut g, 15, m, 1.0);
        let (y12, _) = sys.simulate(&x0, &(&u1 + &u2)).unwrap();
        let (y1, _) = sys.simulate(&x0, &u1).unwrap();
        let (y2, _) = sys.simulate(&Vector::zeros(n), &u2).unwrap();
        prop_assert!((y12 - y1 - y2).amax() < 1e-10);
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn fundamental_lemma(n in 1usize..5, m in 1usize..3, p in 1usize..3, window in 1usize..5, seed in any::<u64>()) {
        let c = SystemConstraints { minimal: true, max_spectral_radius: Some(0.95), ..Default::default() };
        let sys = random_system(n, m, p, &c, seed).unwrap();
        let order = window + n;
        let ds = pe_dataset(&sys, 4 * order * (m + 1) + 10, order, seed, &tol()).unwrap();
        let h = GeneratorSubspace::from_data(&ds, window).unwrap();
        let mut g = rng(seed ^ 11);
        let x0 = Vector::from_column_slice(random_matrix(&mut g, n, 1, 1.0).as_slice());
        let fresh = simulate_trajectory(&sys, &x0, &random_matrix(&mut g, window, m, 1.0)).unwrap();
        let mut w = Vector::zeros(window * (m + p));
        for t in 0..window {
            for ch in 0..m { w[h.u_index(t, ch)] = fresh.u[(t, ch)]; }
            for ch in 0..p { w[h.y_index(t, ch)] = fresh.y[(t, ch)]; }
        }
        let sol = lstsq(&h.generators, &Matrix::from_column_slice(w.len(), 1, w.as_slice()), &tol());
        let res = (&h.generators * sol - Matrix::from_column_slice(w.len(), 1, w.as_slice())).norm();
        prop_assert!(res < 1e-8 * w.norm().max(1.0), "residual {}", res);
    }

    #[test]
    fn mpum_extension_properties(n in 1usize..4, m in 1usize..3, p in 1usize..3, k in 0usize..3, seed in any::<u64>()) {
        let c = SystemConstraints { minimal: true, max_spectral_radius: Some(0.95), ..Default::default() };
        let sys = random_system(n, m, p, &c, seed).unwrap();
        let lag = sys.lag(&tol()).unwrap();
        let order = lag + 1 + n + k;
        let ds = pe_dataset(&sys, 4 * order * (m + 1) + 10, order, seed, &tol()).unwrap();
        let base = mpum_generators(&ds, lag).unwrap();
        let ext = mpum_extended(&ds, lag, k, &tol()).unwrap();
        if k == 0 {
            let both = hstack(&[&base.generators, &ext.generators]);
            let r = numerical_rank(&both, &tol());
            prop_assert_eq!(r, numerical_rank(&base.generators, &tol()));
            prop_assert_eq!(r, numerical_rank(&ext.generators, &tol()));
        }
        // every window of length lag+1 of an extended generator is an MPUM window
        for col in 0..ext.generators.ncols() {
            for s in 0..=k {
                let mut v = Vector::zeros((lag + 1) * (m + p));
                for t in 0..=lag {
                    for ch in 0..m { v[base.u_index(t, ch)] = ext.generators[(ext.u_index(s + t, ch), col)]; }
                    for ch in 0..p { v[base.y_index(t, ch)] = ext.generators[(ext.y_index(s + t, ch), col)]; }
                }
                prop_assert!(in_span(&v, &base.generators, &tol()).unwrap());
            }
        }
    }

    #[test]
    fn continuation_matches_simulation(n in 1usize..4, m in 1usize..3, p in 1usize..3, seed in any::<u64>()) {
        let c = SystemConstraints { minimal: true, max_spectral_radius: Some(0.95), ..Default::default() };
        let sys = random_system(n, m, p, &c, seed).unwrap();
        let lag = sys.lag(&tol()).unwrap();
        let tf = 3;
        let order = lag + tf + n;
        let ds = pe_dataset(&sys, 4 * order * (m + 1) + 10, order, seed, &tol()).unwrap();
        let mut g = rng(seed ^ 3);
        let x0 = Vector::from_column_slice(random_matrix(&mut g, n, 1, 1.0).as_slice());
        let u = random_matrix(&mut g, lag + tf, m, 1.0);
        let t = simulate_trajectory(&sys, &x0, &u).unwrap();
        let yf = unique_continuation(
            &ds, lag, tf,
            &u.rows(0, lag).into_owned(), &t.y.rows(0, lag).into_owned(), &u.rows(lag, tf).into_owned(), &tol(),
        ).unwrap();
        prop_assert!((yf - t.y.rows(lag, tf)).norm() < 1e-7);
    }

    #[test]
    fn zoh_spectrum_maps_by_exponential(n in 1usize..7, h in 0.05f64..2.0, seed in any::<u64>()) {
        let mut g = rng(seed);
        let eigs: Vec<Complex64> = (0..n).map(|k| Complex64::new(-0.1 - k as f64 * 0.3, 0.0)).collect();
        let a = matrix_with_spectrum(&mut g, &eigs);
        let sys = ContinuousStateSpace::new(a, random_matrix(&mut g, n, 1, 1.0), random_matrix(&mut g, 1, n, 1.0), Matrix::from_element(1, 1, 0.7)).unwrap();
        let d = sys.zoh_discretize(h).unwrap();
        prop_assert_eq!(&d.impulse_response(1)[0], &sys.d);
        let mut got: Vec<f64> = eigenvalues(&d.a).unwrap().iter().map(|z| z.re).collect();
        let mut want: Vec<f64> = eigs.iter().map(|z| (z.re * h).exp()).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (x, y) in got.iter().zip(&want) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn siso_informativity_is_sound(n in 1usize..6, len in 3usize..30, seed in any::<u64>()) {
        let c = SystemConstraints { minimal: true, max_spectral_radius: Some(0.95), ..Default::default() };
        let sys = random_system(n, 1, 1, &c, seed).unwrap();
        let lag = sys.lag(&tol()).unwrap();
        prop_assume!(len > lag);
        let mut g = rng(seed ^ 5);
        // arbitrary, often non-exciting data: sparse input, random initial state
        let u = Matrix::from_fn(len, 1, |t, _| if t % 3 == 0 { ddsys_core::lti::random::uniform(&mut g, -1.0, 1.0) } else { 0.0 });
        let x0 = Vector::from_column_slice(random_matrix(&mut g, n, 1, 1.0).as_slice());
        let ds = DataSet::single(simulate_trajectory(&sys, &x0, &u).unwrap());
        let v = reldeg_informativity_data(&ds, lag, &tol()).unwrap();
        if let Some(r) = v.r() {
            prop_assert_eq!(RelDeg::Finite(r), sys.oracle_relative_degree(&tol()).unwrap());
            prop_assert!(certificate_holds(&ds, lag, &v, &tol()).unwrap());
        }
    }
}

#[test]
fn verdicts_invariant_under_scaling() {
    let tol = tol();
    for seed in 0..10u64 {
        let n = 1 + seed as usize % 4;
        let c = SystemConstraints {
            minimal: true,
            max_spectral_radius: Some(0.95),
            relative_degree: Some(vec![1 + seed as usize % n]),
            ..Default::default()
        };
        let sys = random_system(n, 1, 1, &c, seed).unwrap();
        let lag = sys.lag(&tol).unwrap();
        let window = lag + n + 1;
        let ds = pe_dataset(&sys, 6 * (window + n) + 20, window + n, seed, &tol).unwrap();
        let r_s = sys.oracle_relative_degree(&tol).unwrap().finite().unwrap();
        let base = (
            reldeg_pe(&ds, lag, n, window, &tol).unwrap(),
            reldeg_sharp(&ds, lag, window, &tol).unwrap(),
            reldeg_informativity_data(&ds, lag, &tol).unwrap().r(),
            vecreldeg_informativity(&ds, lag, &tol).unwrap().r,
            algorithm2(&ds, lag, n, r_s, &tol).unwrap().s,
        );
        for cs in [1e-3, 1e3] {
            let s = ds.scaled(cs);
            let got = (
                reldeg_pe(&s, lag, n, window, &tol).unwrap(),
                reldeg_sharp(&s, lag, window, &tol).unwrap(),
                reldeg_informativity_data(&s, lag, &tol).unwrap().r(),
                vecreldeg_informativity(&s, lag, &tol).unwrap().r,
                algorithm2(&s, lag, n, r_s, &tol).unwrap().s,
            );
            assert_eq!(got, base, "seed {seed}, c = {cs}");
        }
    }
}

#[test]
fn relative_degree_never_exceeds_lag() {
    let tol = tol();
    for seed in 0..500u64 {
        let n = 1 + seed as usize % 5;
        let c = SystemConstraints {
            minimal: true,
            ..Default::default()
        };
        let sys = random_system(n, 1, 1, &c, seed).unwrap();
        match sys.oracle_relative_degree(&tol).unwrap() {
            RelDeg::Finite(r) => assert!(r <= sys.lag(&tol).unwrap(), "seed {seed}"),
            RelDeg::Infinite => {}
        }
    }
}
