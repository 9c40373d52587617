//! Independent oracles shared by the property and acceptance suites.
//!
//! Nothing here calls the library's solvers: least squares is a plain
//! Householder QR, Hankel matrices are built from their defining index
//! formula and DMD spectra are checked against analytically known values.
#![allow(dead_code, clippy::needless_range_loop)]

use faer::Mat;
use msd::dynamics::{make_system, simulate, Dynamics, SystemSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Least squares of a full-column-rank system by Householder QR.
pub fn qr_lstsq(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let k = if m == 0 { 0 } else { a[0].len() };
    let mut r: Vec<Vec<f64>> = a.to_vec();
    let mut y = b.to_vec();
    for col in 0..k {
        let norm = (col..m).map(|i| r[i][col] * r[i][col]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[col][col] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (col..m).map(|i| r[i][col]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in col..k {
            let s: f64 = (col..m).map(|i| v[i - col] * r[i][j]).sum::<f64>() * 2.0 / vv;
            for i in col..m {
                r[i][j] -= s * v[i - col];
            }
        }
        let s: f64 = (col..m).map(|i| v[i - col] * y[i]).sum::<f64>() * 2.0 / vv;
        for i in col..m {
            y[i] -= s * v[i - col];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * x[j]).sum();
        x[i] = (y[i] - s) / r[i][i];
    }
    x
}

// Gaussian library, a sparse truth with coefficients well clear of the
// threshold, and a little noise on the targets.
pub fn sparse_problem(seed: u64, m: usize, p: usize, n: usize) -> (Mat<f64>, Mat<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
    let theta = Mat::from_fn(m, p, |_, _| g());
    let xi = Mat::from_fn(p, n, |i, j| {
        if (i * 7 + j * 3 + seed as usize).is_multiple_of(4) {
            let v: f64 = g();
            v.signum() * (0.5 + v.abs())
        } else {
            0.0
        }
    });
    let mut xdot = &theta * &xi;
    for j in 0..n {
        for i in 0..m {
            xdot[(i, j)] += 1e-3 * g();
        }
    }
    (theta, xdot)
}

fn restricted_fit(theta: &Mat<f64>, target: &[f64], active: &[usize]) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..theta.nrows()).map(|i| active.iter().map(|&j| theta[(i, j)]).collect()).collect();
    qr_lstsq(&rows, target)
}

/// Textbook sequentially thresholded least squares: dense fit, then
/// `iters` rounds of "zero the small ones, refit the rest".
pub fn stlsq_oracle(theta: &Mat<f64>, xdot: &Mat<f64>, lambda: f64, iters: usize) -> Mat<f64> {
    let (p, n) = (theta.ncols(), xdot.ncols());
    let mut xi = Mat::zeros(p, n);
    let all: Vec<usize> = (0..p).collect();
    for j in 0..n {
        let target: Vec<f64> = (0..theta.nrows()).map(|i| xdot[(i, j)]).collect();
        let mut coef = restricted_fit(theta, &target, &all);
        for _ in 0..iters {
            let active: Vec<usize> = (0..p).filter(|&i| coef[i].abs() >= lambda).collect();
            let fit = restricted_fit(theta, &target, &active);
            coef = vec![0.0; p];
            for (k, &i) in active.iter().enumerate() {
                coef[i] = fit[k];
            }
        }
        for i in 0..p {
            xi[(i, j)] = if coef[i].abs() >= lambda { coef[i] } else { 0.0 };
        }
    }
    xi
}

/// `H[i][j] = x[i·d + j·c]`, `H'[i][j] = x[i·d + j·c + 1]` for a scalar series.
pub fn hankel_oracle(x: &[f64], q: usize, d: usize, c: usize, p: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let h = (0..q).map(|i| (0..p).map(|j| x[i * d + j * c]).collect()).collect();
    let h1 = (0..q).map(|i| (0..p).map(|j| x[i * d + j * c + 1]).collect()).collect();
    (h, h1)
}

/// A state on the default attractor after `transient` periods.
pub fn on_attractor(spec: &SystemSpec, transient: f64) -> Vec<f64> {
    let s = simulate(spec, &spec.default_initial_condition(), 4096.0, 1.0 / 4096.0, transient).unwrap();
    s.row(0)
}

fn max_error_against(spec: &SystemSpec, x0: &[f64], rate: f64, reference: &Mat<f64>, ref_rate: f64) -> f64 {
    let s = simulate(spec, x0, rate, 1.0, 0.0).unwrap();
    let stride = (ref_rate / rate) as usize;
    let mut err = 0.0f64;
    for k in 0..s.len() {
        for i in 0..spec.dimension() {
            err = err.max((s.values()[(k, i)] - reference[(k * stride, i)]).abs());
        }
    }
    err
}

/// Ratio of max errors over one Lorenz period at steps `T/512` and `T/1024`,
/// both measured against a `T/2^15` reference.
pub fn rk4_order_factor() -> f64 {
    let spec = make_system("lorenz", &[]).unwrap();
    let x0 = on_attractor(&spec, 10.0);
    let reference = simulate(&spec, &x0, 32768.0, 1.0, 0.0).unwrap();
    let coarse = max_error_against(&spec, &x0, 512.0, reference.values(), 32768.0);
    let fine = max_error_against(&spec, &x0, 1024.0, reference.values(), 32768.0);
    coarse / fine
}

/// Largest relative change of the Duffing energy over five periods at `T/4096`.
pub fn duffing_energy_drift() -> f64 {
    let spec = make_system("duffing", &[]).unwrap();
    let (alpha, beta) = (spec.param("alpha"), spec.param("beta"));
    let energy = |x: &[f64]| 0.5 * x[1] * x[1] + 0.5 * alpha * x[0] * x[0] + 0.25 * beta * x[0].powi(4);
    let s = simulate(&spec, &spec.default_initial_condition(), 4096.0, 5.0, 0.0).unwrap();
    let e0 = energy(&s.row(0));
    (0..s.len()).map(|k| ((energy(&s.row(k)) - e0) / e0).abs()).fold(0.0, f64::max)
}

/// Samples of `cos(2π t)` at `rate` per unit time.
pub fn tone(rate: usize, n: usize) -> Vec<f64> {
    (0..n).map(|k| (2.0 * std::f64::consts::PI * k as f64 / rate as f64).cos()).collect()
}

pub fn normalized_rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let err: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    let scale: f64 = truth.iter().map(|t| t * t).sum();
    (err / scale).sqrt()
}
