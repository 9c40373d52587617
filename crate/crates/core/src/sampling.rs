//! Subsampling policies for SINDy training data.
//!
//! A uniform schedule keeps every `s`-th fine-grid sample. A burst schedule
//! keeps short runs of consecutive fine-grid samples spread over a long span,
//! so derivatives stay accurate while the total sample count stays small.
//! Random schedules use ChaCha8 seeded from a `u64`, which reproduces
//! bit-for-bit on every platform.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::sindy::{center_difference, TrainingPairs};

/// Burst length used throughout the multiscale experiments.
pub const DEFAULT_BURST_SIZE: usize = 8;

/// Every `fine_rate / target_rate`-th index over `duration` periods.
///
/// The window is half-open, so the count is `ceil(duration · target_rate)`.
pub fn uniform_schedule(fine_rate: u64, target_rate: u64, duration: f64) -> Result<Vec<usize>> {
    if target_rate == 0 || fine_rate == 0 || !fine_rate.is_multiple_of(target_rate) {
        return Err(Error::InvalidArgument(format!("target rate {target_rate} must divide fine rate {fine_rate}")));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {duration}")));
    }
    let stride = (fine_rate / target_rate) as usize;
    let count = ((duration * target_rate as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok((0..count).map(|k| k * stride).collect())
}

/// Fine-grid start indices of equal-length bursts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstSchedule {
    pub burst_size: usize,
    pub n_bursts: usize,
    /// Sorted; consecutive starts differ by at least `burst_size`.
    pub start_indices: Vec<usize>,
    pub fine_dt: f64,
    pub span: f64,
    pub seed: u64,
}

impl BurstSchedule {
    /// Number of fine-grid samples in the span.
    pub fn fine_len(&self) -> usize {
        fine_len(self.span, self.fine_dt)
    }

    pub fn total_samples(&self) -> usize {
        self.n_bursts * self.burst_size
    }

    /// All sampled fine-grid indices in order.
    pub fn indices(&self) -> Vec<usize> {
        self.start_indices.iter().flat_map(|&s| s..s + self.burst_size).collect()
    }

    /// Checks ordering, non-overlap and that every burst fits in the span.
    pub fn validate(&self) -> Result<()> {
        if self.burst_size < 3 {
            return Err(Error::InfeasibleSchedule(format!("burst size {} leaves no interior points", self.burst_size)));
        }
        if self.start_indices.len() != self.n_bursts {
            return Err(Error::InfeasibleSchedule("burst count disagrees with start list".into()));
        }
        for w in self.start_indices.windows(2) {
            if w[1] < w[0] + self.burst_size {
                return Err(Error::InfeasibleSchedule(format!("bursts at {} and {} overlap", w[0], w[1])));
            }
        }
        if let Some(&last) = self.start_indices.last() {
            if last + self.burst_size > self.fine_len() {
                return Err(Error::InfeasibleSchedule(format!("burst at {last} runs past the span")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schedule: Self = serde_json::from_str(s)?;
        schedule.validate()?;
        Ok(schedule)
    }
}

fn fine_len(span: f64, fine_dt: f64) -> usize {
    (span / fine_dt + 1e-9).floor() as usize
}

fn check_burst_args(duration: f64, fine_dt: f64, burst_size: usize) -> Result<usize> {
    if !(fine_dt > 0.0) || !fine_dt.is_finite() || !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument("duration and fine step must be positive".into()));
    }
    if burst_size < 3 {
        return Err(Error::InfeasibleSchedule(format!("burst size {burst_size} leaves no interior points")));
    }
    Ok(fine_len(duration, fine_dt))
}

/// Evenly spaced bursts, each shifted by a uniform random offset.
///
/// With `N` fine samples and gap `g = N / n_bursts`, burst `i` starts at
/// `floor(i·g + u·(g − burst_size))`, `u ~ U[0, 1)`: the even position
/// `i·g + (g − burst_size)/2` plus a symmetric shift over the whole slack.
/// Bursts never overlap because each stays inside its own slot.
pub fn jittered_burst_schedule(
    duration: f64,
    fine_dt: f64,
    burst_size: usize,
    n_bursts: usize,
    seed: u64,
) -> Result<BurstSchedule> {
    let n = check_burst_args(duration, fine_dt, burst_size)?;
    if n_bursts == 0 {
        return Err(Error::InfeasibleSchedule("need at least one burst".into()));
    }
    if n_bursts * burst_size > n {
        return Err(Error::InfeasibleSchedule(format!("{n_bursts} bursts of {burst_size} do not fit in {n} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = n as f64 / n_bursts as f64;
    let slack = gap - burst_size as f64;
    let start_indices = (0..n_bursts)
        .map(|i| {
            let u: f64 = rng.random();
            (i as f64 * gap + u * slack).floor() as usize
        })
        .collect();
    let schedule = BurstSchedule { burst_size, n_bursts, start_indices, fine_dt, span: duration, seed };
    debug_assert!(schedule.validate().is_ok());
    Ok(schedule)
}

/// Bursts whose start times form a Poisson process.
///
/// Arrivals have intensity `target_rate / burst_size` per unit time over the
/// feasible start window; a burst that would overlap the previous kept burst
/// is dropped. The schedule may be empty.
pub fn poisson_burst_schedule(
    duration: f64,
    fine_dt: f64,
    burst_size: usize,
    target_rate: f64,
    seed: u64,
) -> Result<BurstSchedule> {
    let n = check_burst_args(duration, fine_dt, burst_size)?;
    if !(target_rate > 0.0) || !target_rate.is_finite() || target_rate * duration < burst_size as f64 {
        return Err(Error::InfeasibleSchedule(format!(
            "rate {target_rate} over {duration} yields fewer than one burst of {burst_size}"
        )));
    }
    if burst_size > n {
        return Err(Error::InfeasibleSchedule(format!("burst of {burst_size} exceeds {n} samples")));
    }
    let intensity = target_rate / burst_size as f64;
    let exp = Exp::new(intensity).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last_start = n - burst_size;
    let mut starts: Vec<usize> = Vec::new();
    let mut t = exp.sample(&mut rng);
    loop {
        let k = (t / fine_dt).floor();
        if k > last_start as f64 {
            break;
        }
        let k = k as usize;
        if starts.last().is_none_or(|&s| k >= s + burst_size) {
            starts.push(k);
        }
        t += exp.sample(&mut rng);
    }
    Ok(BurstSchedule { burst_size, n_bursts: starts.len(), start_indices: starts, fine_dt, span: duration, seed })
}

/// Which fine-grid samples a training set is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// Equally spaced indices; derivatives use the decimated step.
    Uniform(Vec<usize>),
    /// Derivatives are taken inside each burst on the fine step.
    Burst(BurstSchedule),
}

/// SINDy training pairs from a fine-grid series under a schedule.
///
/// Each burst contributes `burst_size − 2` rows; a uniform schedule of `k`
/// indices contributes `k − 2`.
pub fn extract_training_pairs(series: &TimeSeries, schedule: &Schedule) -> Result<TrainingPairs> {
    match schedule {
        Schedule::Uniform(indices) => uniform_pairs(series, indices),
        Schedule::Burst(b) => burst_pairs(series, b),
    }
}

fn uniform_pairs(series: &TimeSeries, indices: &[usize]) -> Result<TrainingPairs> {
    if indices.len() < 3 {
        return Err(Error::SeriesTooShort(format!("uniform schedule has {} samples, need 3", indices.len())));
    }
    let stride = indices[1]
        .checked_sub(indices[0])
        .filter(|&s| s > 0)
        .ok_or_else(|| Error::InvalidArgument("uniform schedule must be strictly increasing".into()))?;
    if indices.windows(2).any(|w| w[1] != w[0] + stride) {
        return Err(Error::InvalidArgument("uniform schedule is not equally spaced".into()));
    }
    let values = series.gather(indices)?;
    let sub = TimeSeries::new(series.time(indices[0]), series.dt() * stride as f64, values)?;
    center_difference(&sub)
}

fn burst_pairs(series: &TimeSeries, schedule: &BurstSchedule) -> Result<TrainingPairs> {
    schedule.validate()?;
    if ((schedule.fine_dt - series.dt()) / series.dt()).abs() > 1e-9 {
        return Err(Error::DimensionMismatch(format!(
            "schedule step {} differs from series step {}",
            schedule.fine_dt,
            series.dt()
        )));
    }
    let b = schedule.burst_size;
    let n = series.dim();
    let inner = b - 2;
    let mut x = Mat::zeros(schedule.n_bursts * inner, n);
    let mut xdot = Mat::zeros(schedule.n_bursts * inner, n);
    let inv = 1.0 / (2.0 * series.dt());
    let v = series.values();
    for (k, &s) in schedule.start_indices.iter().enumerate() {
        if s + b > series.len() {
            return Err(Error::SeriesTooShort(format!(
                "burst at {s} needs {} rows, series has {}",
                s + b,
                series.len()
            )));
        }
        for i in 0..inner {
            let row = k * inner + i;
            for j in 0..n {
                x[(row, j)] = v[(s + i + 1, j)];
                xdot[(row, j)] = (v[(s + i + 2, j)] - v[(s + i, j)]) * inv;
            }
        }
    }
    Ok(TrainingPairs { x, xdot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_system, simulate, Dynamics};

    #[test]
    fn uniform_counts() {
        let s = uniform_schedule(1 << 18, 1 << 10, 1.0).unwrap();
        assert_eq!(s.len(), 1024);
        assert_eq!(s[1], 256);
        assert_eq!(uniform_schedule(64, 64, 1.0).unwrap(), (0..64).collect::<Vec<_>>());
        let direct = (0..).take_while(|&k| (k as f64) < 0.85 * 32.0).count();
        assert_eq!(uniform_schedule(1 << 10, 32, 0.85).unwrap().len(), direct);
        assert_eq!(direct, (0.85f64 * 32.0).floor() as usize + 1);
        assert!(uniform_schedule(96, 64, 1.0).is_err());
    }

    #[test]
    fn jittered_schedule_basics() {
        let s = jittered_burst_schedule(10.0, 0.01, 8, 12, 3).unwrap();
        assert_eq!(s.indices().len(), 96);
        s.validate().unwrap();
        assert_eq!(s, jittered_burst_schedule(10.0, 0.01, 8, 12, 3).unwrap());
        // no slack: even, deterministic placement
        let tight = jittered_burst_schedule(0.8, 0.01, 8, 10, 99).unwrap();
        assert_eq!(tight.start_indices, (0..10).map(|i| i * 8).collect::<Vec<_>>());
        let one = jittered_burst_schedule(1.0, 0.01, 8, 1, 5).unwrap();
        assert!(one.start_indices[0] <= 92);
        assert!(jittered_burst_schedule(0.5, 0.01, 8, 10, 0).is_err());
        assert!(jittered_burst_schedule(1.0, 0.01, 2, 1, 0).is_err());
    }

    #[test]
    fn poisson_schedule_replays_and_respects_budget() {
        let a = poisson_burst_schedule(100.0, 0.01, 8, 2.0, 11).unwrap();
        assert_eq!(a, poisson_burst_schedule(100.0, 0.01, 8, 2.0, 11).unwrap());
        a.validate().unwrap();
        assert!(poisson_burst_schedule(1.0, 0.01, 8, 2.0, 0).is_err());
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = jittered_burst_schedule(3.3, 0.001, 8, 40, 17).unwrap();
        let back = BurstSchedule::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
        assert_eq!(s.fine_dt.to_bits(), back.fine_dt.to_bits());
    }

    #[test]
    fn burst_rows_and_linear_signal() {
        let samples: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let series = TimeSeries::from_scalar(0.0, 0.01, &samples).unwrap();
        let s = jittered_burst_schedule(10.0, 0.01, 8, 5, 1).unwrap();
        let p = extract_training_pairs(&series, &Schedule::Burst(s)).unwrap();
        assert_eq!(p.len(), 30);
        assert!(p.xdot.col(0).iter().all(|&d| (d - 1.0).abs() < 1e-12));
        for stride in [1, 3, 7] {
            let idx: Vec<usize> = (0..50).map(|k| k * stride).collect();
            let p = extract_training_pairs(&series, &Schedule::Uniform(idx)).unwrap();
            assert_eq!(p.len(), 48);
            assert!(p.xdot.col(0).iter().all(|&d| (d - 1.0).abs() < 1e-12));
        }
        assert!(extract_training_pairs(&series, &Schedule::Uniform(vec![0, 2, 3])).is_err());
    }

    fn max_rel_error(pairs: &TrainingPairs, system: &dyn Dynamics) -> f64 {
        let n = pairs.x.ncols();
        let (mut err, mut scale) = (0.0f64, 0.0f64);
        let mut f = vec![0.0; n];
        for i in 0..pairs.len() {
            let x: Vec<f64> = (0..n).map(|j| pairs.x[(i, j)]).collect();
            system.rhs(&x, &mut f);
            for j in 0..n {
                err = err.max((pairs.xdot[(i, j)] - f[j]).abs());
                scale = scale.max(f[j].abs());
            }
        }
        err / scale
    }

    #[test]
    fn burst_derivatives_match_rhs_on_fine_grid() {
        let lorenz = make_system("lorenz", &[]).unwrap();
        let series = simulate(&lorenz, &[-8.0, 8.0, 27.0], (1u64 << 18) as f64, 2.0, 1.0).unwrap();
        let span = series.len() as f64 * series.dt();
        let s = jittered_burst_schedule(span, series.dt(), 8, 40, 4).unwrap();
        let pairs = extract_training_pairs(&series, &Schedule::Burst(s)).unwrap();
        assert!(max_rel_error(&pairs, &lorenz) < 1e-6);
    }

    #[test]
    fn bursts_beat_decimation_at_equal_budget() {
        let lorenz = make_system("lorenz", &[]).unwrap();
        let fine = 1u64 << 14;
        let series = simulate(&lorenz, &[-8.0, 8.0, 27.0], fine as f64, 1.0, 1.0).unwrap();
        for target in [64u64, 256, 512] {
            let idx = uniform_schedule(fine, target, 1.0).unwrap();
            let uniform = extract_training_pairs(&series, &Schedule::Uniform(idx.clone())).unwrap();
            let span = series.len() as f64 * series.dt();
            let b = jittered_burst_schedule(span, series.dt(), 8, idx.len() / 8, 2).unwrap();
            let burst = extract_training_pairs(&series, &Schedule::Burst(b)).unwrap();
            assert!(max_rel_error(&burst, &lorenz) < max_rel_error(&uniform, &lorenz), "rate {target}");
        }
    }
}
