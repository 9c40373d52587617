use super::integrate::simulate;
use super::systems::{Dynamics, SystemKind, SystemSpec};
use crate::error::{Error, Result};

/// Mean spacing between upward crossings of `level` in `samples` (linear interpolation).
pub fn mean_crossing_interval(samples: &[f64], dt: f64, level: f64) -> Option<f64> {
    let crossings: Vec<f64> = samples
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < level && w[1] >= level)
        .map(|(k, w)| (k as f64 + (level - w[0]) / (w[1] - w[0])) * dt)
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Estimates the period of a system whose parameters have no frozen value.
///
/// Integrates from the default initial condition, skips a long transient and
/// averages the spacing of upward mean-level crossings of one component
/// (z for Lorenz, y for Rossler, x otherwise).
pub fn measure_period(spec: &SystemSpec) -> Result<f64> {
    let (component, scale) = match spec.kind() {
        SystemKind::Lorenz => (2, 1.0),
        SystemKind::Rossler => (1, spec.param("tau") * 2.0 * std::f64::consts::PI),
        SystemKind::VanDerPol => (0, 2.0 * std::f64::consts::PI),
        SystemKind::Duffing => (0, 2.0 * std::f64::consts::PI),
    };
    // Integrate on a provisional unit of `scale` time units.
    let probe = spec.clone().with_period(scale)?;
    let rate = 2000.0;
    let series = simulate(&probe, &spec.default_initial_condition(), rate, 60.0, 40.0)?;
    let x = series.column(component);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    mean_crossing_interval(&x, series.dt(), mean).ok_or_else(|| Error::InvalidParameter {
        system: spec.name().into(),
        name: "period".into(),
        reason: "trajectory does not oscillate; supply the period explicitly".into(),
    })
}

/// Empirical period of any simulated trajectory component.
pub fn empirical_period<D: Dynamics + ?Sized>(
    system: &D,
    x0: &[f64],
    component: usize,
    level: f64,
    cycles: f64,
) -> Result<f64> {
    let series = simulate(system, x0, 4096.0, cycles, 10.0)?;
    mean_crossing_interval(&series.column(component), series.dt(), level)
        .ok_or_else(|| Error::InvalidArgument("no repeated crossings found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::make_system;

    #[test]
    fn crossing_interval_of_sine() {
        let dt = 0.01;
        let x: Vec<f64> = (0..1000).map(|k| (2.0 * std::f64::consts::PI * k as f64 * dt / 1.7).sin()).collect();
        let t = mean_crossing_interval(&x, dt, 0.0).unwrap();
        assert!((t - 1.7).abs() < 1e-4);
    }

    #[test]
    fn measured_period_for_unlisted_parameters() {
        // μ = 1 Van der Pol has period ≈ 6.6633.
        let s = make_system("vanderpol", &[("mu", 1.0)]).unwrap();
        assert!((s.period() - 6.6633).abs() < 1e-2, "{}", s.period());
    }
}
