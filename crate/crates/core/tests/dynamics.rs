mod common;

use msd::dynamics::{
    empirical_period, make_coupled, make_system, simulate, Coupling, Dynamics, SystemKind, TimeSeries,
};
use msd::sindy::PolynomialLibrary;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Exponent vectors of total degree <= 3, built without the library.
fn monomials(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut e = vec![0u32; n];
    fn rec(i: usize, left: u32, e: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == e.len() {
            out.push(e.clone());
            return;
        }
        for k in 0..=left {
            e[i] = k;
            rec(i + 1, left - k, e, out);
        }
        e[i] = 0;
    }
    rec(0, 3, &mut e, &mut out);
    out
}

// Recovers the polynomial vector field by exact interpolation of `rhs` at
// random states, then reports which monomials carry weight.
fn interpolated_support<D: Dynamics>(system: &D) -> Vec<Vec<bool>> {
    let n = system.dimension();
    let mons = monomials(n);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let states: Vec<Vec<f64>> =
        (0..4 * mons.len()).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let rows: Vec<Vec<f64>> = states
        .iter()
        .map(|x| mons.iter().map(|e| e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product()).collect())
        .collect();
    let lib = PolynomialLibrary::cubic(n).unwrap();
    let mut support = vec![vec![false; n]; lib.len()];
    let mut out = vec![0.0; n];
    for j in 0..n {
        let target: Vec<f64> = states
            .iter()
            .map(|x| {
                system.rhs(x, &mut out);
                out[j]
            })
            .collect();
        let coef = common::qr_lstsq(&rows, &target);
        for (e, c) in mons.iter().zip(coef) {
            if c.abs() > 1e-8 {
                support[lib.index_of(e).unwrap()][j] = true;
            }
        }
    }
    support
}

#[test]
fn true_support_matches_interpolated_vector_field() {
    for kind in SystemKind::ALL {
        let spec = make_system(kind.name(), &[]).unwrap();
        assert_eq!(spec.true_support(), interpolated_support(&spec), "{}", kind.name());
    }
    for kind in ["vdp-vdp", "slowvdp-fastlorenz", "fastvdp-slowlorenz"] {
        let spec = make_coupled(kind, 8.0, None).unwrap();
        assert_eq!(spec.true_support(), interpolated_support(&spec), "{kind}");
    }
}

#[test]
fn rk4_error_shrinks_sixteenfold_per_halving() {
    let factor = common::rk4_order_factor();
    assert!((12.0..=20.0).contains(&factor), "order factor {factor}");
}

#[test]
fn duffing_conserves_energy() {
    let drift = common::duffing_energy_drift();
    assert!(drift < 1e-6, "energy drift {drift}");
}

#[test]
fn vanderpol_converged_at_benchmark_rate() {
    let spec = make_system("vanderpol", &[]).unwrap();
    let x0 = spec.default_initial_condition();
    let coarse = simulate(&spec, &x0, 4096.0, 5.0, 0.0).unwrap();
    let fine = simulate(&spec, &x0, (1u32 << 20) as f64, 5.0, 0.0).unwrap();
    let stride = 1 << 8;
    let (mut err, mut norm) = (0.0, 0.0);
    for k in 0..coarse.len() {
        for i in 0..2 {
            let r = fine.values()[(k * stride, i)];
            err += (coarse.values()[(k, i)] - r).powi(2);
            norm += r * r;
        }
    }
    let rel = (err / norm).sqrt();
    assert!(rel < 1e-6, "relative rms {rel}");
}

#[test]
fn vanderpol_period_matches_known_value() {
    let spec = make_system("vanderpol", &[]).unwrap();
    let t = empirical_period(&spec, &spec.default_initial_condition(), 0, 0.0, 10.0).unwrap();
    assert!((t / 11.45 - 1.0).abs() < 0.02, "period {t}");
}

#[test]
fn zero_coupling_runs_each_member_on_its_own_clock() {
    let ratio = 4.0;
    let rate = 512.0;
    let pair = make_coupled("vdp-vdp", ratio, Some((Coupling::zeros(2, 2), Coupling::zeros(2, 2)))).unwrap();
    let vdp = make_system("vanderpol", &[]).unwrap();
    let x0 = pair.default_initial_condition();
    let joint = simulate(&pair, &x0, rate, 3.0, 1.0).unwrap();
    let fast = simulate(&vdp, &x0[..2], rate, 3.0, 1.0).unwrap();
    // the slow member sees time divided by tau_slow
    let slow = simulate(&vdp, &x0[2..], rate * pair.tau_slow(), 3.0 / pair.tau_slow(), 1.0 / pair.tau_slow()).unwrap();
    assert_eq!(joint.len(), fast.len());
    assert_eq!(joint.len(), slow.len());
    for k in 0..joint.len() {
        for i in 0..2 {
            assert!((joint.values()[(k, i)] - fast.values()[(k, i)]).abs() < 1e-9);
            assert!((joint.values()[(k, 2 + i)] - slow.values()[(k, i)]).abs() < 1e-8);
        }
    }
}

#[test]
fn fixed_point_series_is_constant() {
    for kind in SystemKind::ALL {
        let spec = make_system(kind.name(), &[]).unwrap();
        let x0 = spec.fixed_point();
        let s = simulate(&spec, &x0, 256.0, 2.0, 0.0).unwrap();
        for k in 0..s.len() {
            for (i, v) in x0.iter().enumerate() {
                assert!((s.values()[(k, i)] - v).abs() < 1e-12, "{}", kind.name());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sample_count_is_rate_times_duration(rate in 2u32..2000, tenths in 1u32..40) {
        let spec = make_system("duffing", &[]).unwrap();
        let periods = tenths as f64 / 10.0;
        let s = simulate(&spec, &spec.default_initial_condition(), rate as f64, periods, 0.0).unwrap();
        prop_assert_eq!(s.len(), (rate as f64 * periods).round() as usize);
        prop_assert!((s.dt() - spec.period() / rate as f64).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_bit_exact(values in prop::collection::vec(-1e6f64..1e6, 3..60), dt in 1e-4f64..10.0) {
        let s = TimeSeries::from_scalar(0.5, dt, &values).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.column(0), s.column(0));
        // the step is re-derived from the printed time stamps
        prop_assert!((back.dt() / s.dt() - 1.0).abs() < 1e-12);
    }
}
