use faer::Mat;

use super::series::TimeSeries;
use super::systems::Dynamics;
use crate::error::{Error, Result};

/// One classical fourth-order Runge–Kutta step of size `h`, in place.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dimension: usize) -> Self {
        Self {
            k1: vec![0.0; dimension],
            k2: vec![0.0; dimension],
            k3: vec![0.0; dimension],
            k4: vec![0.0; dimension],
            tmp: vec![0.0; dimension],
        }
    }

    pub fn step<D: Dynamics + ?Sized>(&mut self, system: &D, x: &mut [f64], h: f64) {
        let n = x.len();
        system.rhs(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        system.rhs(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        system.rhs(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        system.rhs(&self.tmp, &mut self.k4);
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates with fixed step `dt = T / rate`, discards `transient` periods and
/// returns `round(rate · n_periods)` samples starting at `t = transient · T`.
pub fn simulate<D: Dynamics + ?Sized>(
    system: &D,
    x0: &[f64],
    rate: f64,
    n_periods: f64,
    transient: f64,
) -> Result<TimeSeries> {
    simulate_with_substeps(system, x0, rate, n_periods, transient, 1)
}

/// Like [`simulate`] but takes `substeps` RK4 steps between stored samples,
/// so coarse output grids keep a fine integration step.
pub fn simulate_with_substeps<D: Dynamics + ?Sized>(
    system: &D,
    x0: &[f64],
    rate: f64,
    n_periods: f64,
    transient: f64,
    substeps: usize,
) -> Result<TimeSeries> {
    if !(rate >= 2.0) || !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("sampling rate must be at least 2 samples/period, got {rate}")));
    }
    if !(n_periods > 0.0) || !n_periods.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {n_periods}")));
    }
    if !(transient >= 0.0) || !transient.is_finite() {
        return Err(Error::InvalidArgument(format!("transient must be non-negative, got {transient}")));
    }
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be positive".into()));
    }
    let n = system.dimension();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("initial condition has {} entries, system has {n}", x0.len())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial condition must be finite".into()));
    }

    let period = system.period();
    let dt = period / rate;
    let h = dt / substeps as f64;
    let m = (rate * n_periods).round() as usize;
    if m == 0 {
        return Err(Error::InvalidArgument("requested zero samples".into()));
    }
    let skip = (rate * transient).round() as usize;

    let mut rk = Rk4::new(n);
    let mut x = x0.to_vec();
    let mut step = 0usize;
    let mut advance = |x: &mut [f64], step: &mut usize| -> Result<()> {
        for _ in 0..substeps {
            rk.step(system, x, h);
        }
        *step += 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: *step, time: *step as f64 * dt });
        }
        Ok(())
    };
    for _ in 0..skip {
        advance(&mut x, &mut step)?;
    }
    let mut values = Mat::<f64>::zeros(m, n);
    for k in 0..m {
        if k > 0 {
            advance(&mut x, &mut step)?;
        }
        for (j, &v) in x.iter().enumerate() {
            values[(k, j)] = v;
        }
    }
    TimeSeries::new(skip as f64 * dt, dt, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_system, SystemKind};

    #[test]
    fn row_count_and_start_time() {
        let s = make_system("lorenz", &[]).unwrap();
        let ts = simulate(&s, &[-8.0, 8.0, 27.0], 64.0, 2.5, 1.0).unwrap();
        assert_eq!(ts.len(), 160);
        assert!((ts.t0() - 0.759).abs() < 1e-12);
        assert!((ts.dt() - 0.759 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_stays_constant() {
        for kind in SystemKind::ALL {
            let s = make_system(kind.name(), &[]).unwrap();
            let x0 = s.fixed_point();
            let ts = simulate(&s, &x0, 64.0, 1.0, 0.0).unwrap();
            for k in 0..ts.len() {
                for (j, &v) in ts.row(k).iter().enumerate() {
                    assert!((v - x0[j]).abs() < 1e-12, "{kind} drifted at row {k}");
                }
            }
        }
    }

    #[test]
    fn invalid_arguments() {
        let s = make_system("vanderpol", &[]).unwrap();
        assert!(simulate(&s, &[2.0, 0.0], 1.5, 1.0, 0.0).is_err());
        assert!(simulate(&s, &[2.0, f64::INFINITY], 64.0, 1.0, 0.0).is_err());
        assert!(simulate(&s, &[2.0], 64.0, 1.0, 0.0).is_err());
        assert!(simulate(&s, &[2.0, 0.0], 64.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        // Van der Pol with a huge state blows up under a coarse step.
        let s = make_system("vanderpol", &[]).unwrap();
        let err = simulate(&s, &[1e6, 1e6], 2.0, 20.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn substeps_refine_coarse_grid() {
        let s = make_system("vanderpol", &[]).unwrap();
        let fine = simulate(&s, &[2.0, 0.0], 4096.0, 1.0, 0.0).unwrap();
        let coarse = simulate_with_substeps(&s, &[2.0, 0.0], 128.0, 1.0, 0.0, 32).unwrap();
        for k in 0..coarse.len() {
            let a = coarse.row(k);
            let b = fine.row(k * 32);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-11);
        }
    }
}
