use std::io::{BufRead, Write};

use faer::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Uniformly sampled multivariate trajectory. Row `k` is the state at `t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Mat<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Mat<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidArgument("start time must be finite".into()));
        }
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidArgument("time series needs at least one row and column".into()));
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::InvalidArgument(format!("non-finite value at row {i}, column {j}")));
                }
            }
        }
        Ok(Self { t0, dt, values })
    }

    /// Scalar series from a slice of samples.
    pub fn from_scalar(t0: f64, dt: f64, samples: &[f64]) -> Result<Self> {
        Self::new(t0, dt, Mat::from_fn(samples.len(), 1, |i, _| samples[i]))
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn into_values(self) -> Mat<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.values[(k, j)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.col(j).iter().copied().collect()
    }

    /// Keeps only the listed state columns.
    pub fn select(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "column {bad} out of range for a {}-dimensional series",
                self.dim()
            )));
        }
        let values = Mat::from_fn(self.len(), columns.len(), |i, j| self.values[(i, columns[j])]);
        Ok(Self { t0: self.t0, dt: self.dt, values })
    }

    /// Rows `start..start+len`, keeping the time axis consistent.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(Error::SeriesTooShort(format!("window {start}..{} exceeds {} rows", start + len, self.len())));
        }
        let values = self.values.subrows(start, len).to_owned();
        Ok(Self { t0: self.time(start), dt: self.dt, values })
    }

    /// Every `stride`-th row starting at `offset`.
    pub fn decimate(&self, stride: usize, offset: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidArgument("decimation stride must be positive".into()));
        }
        if offset >= self.len() {
            return Err(Error::SeriesTooShort(format!("offset {offset} beyond {} rows", self.len())));
        }
        let m = (self.len() - offset - 1) / stride + 1;
        let values = Mat::from_fn(m, self.dim(), |i, j| self.values[(offset + i * stride, j)]);
        Ok(Self { t0: self.time(offset), dt: self.dt * stride as f64, values })
    }

    /// Rows gathered at arbitrary indices (no time-axis semantics beyond row order).
    pub fn gather(&self, indices: &[usize]) -> Result<Mat<f64>> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::SeriesTooShort(format!("index {bad} beyond {} rows", self.len())));
        }
        Ok(Mat::from_fn(indices.len(), self.dim(), |i, j| self.values[(indices[i], j)]))
    }

    /// Element-wise sum of two series on the same grid.
    pub fn add(&self, other: &TimeSeries) -> Result<Self> {
        if self.len() != other.len() || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("series shapes differ".into()));
        }
        if self.t0 != other.t0 || self.dt != other.dt {
            return Err(Error::DimensionMismatch("series lie on different time grids".into()));
        }
        let values = Mat::from_fn(self.len(), self.dim(), |i, j| self.values[(i, j)] + other.values[(i, j)]);
        Ok(Self { t0: self.t0, dt: self.dt, values })
    }

    /// Writes `t,x1,...,xn` CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("t");
        for j in 0..self.dim() {
            header.push_str(&format!(",x{}", j + 1));
        }
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&format!("{:.16e}", self.time(i)));
            for j in 0..self.dim() {
                line.push_str(&format!(",{:.16e}", self.values[(i, j)]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the CSV layout produced by [`TimeSeries::write_csv`].
    ///
    /// The step is taken from the first two time stamps and every later stamp
    /// must agree with the uniform grid to a relative 1e-9.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Csv("empty input".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first().map(|c| c.trim()) != Some("t") || cols.len() < 2 {
            return Err(Error::Csv(format!("expected header `t,x1,...`, got `{header}`")));
        }
        let n = cols.len() - 1;
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 1 {
                return Err(Error::Csv(format!("line {}: expected {} fields", lineno + 2, n + 1)));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Csv(format!("line {}: {e}", lineno + 2)));
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                data.push(parse(f)?);
            }
        }
        if times.is_empty() {
            return Err(Error::Csv("no data rows".into()));
        }
        let m = times.len();
        let dt = if m > 1 { (times[m - 1] - times[0]) / (m - 1) as f64 } else { 1.0 };
        for (k, &t) in times.iter().enumerate() {
            let expected = times[0] + k as f64 * dt;
            if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                return Err(Error::Csv(format!("row {k} is off the uniform time grid")));
            }
        }
        let values = Mat::from_fn(m, n, |i, j| data[i * n + j]);
        Self::new(times[0], dt, values)
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    t0: f64,
    dt: f64,
    rows: usize,
    cols: usize,
    /// Row-major values.
    values: Vec<f64>,
}

impl Serialize for TimeSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut values = Vec::with_capacity(self.len() * self.dim());
        for i in 0..self.len() {
            for j in 0..self.dim() {
                values.push(self.values[(i, j)]);
            }
        }
        SeriesRepr { t0: self.t0, dt: self.dt, rows: self.len(), cols: self.dim(), values }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SeriesRepr::deserialize(d)?;
        if r.values.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom("value count does not match shape"));
        }
        let values = Mat::from_fn(r.rows, r.cols, |i, j| r.values[i * r.cols + j]);
        TimeSeries::new(r.t0, r.dt, values).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(m: usize) -> TimeSeries {
        TimeSeries::new(1.0, 0.5, Mat::from_fn(m, 2, |i, j| i as f64 * (j as f64 + 1.0))).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(TimeSeries::new(0.0, 0.0, Mat::zeros(2, 1)).is_err());
        assert!(TimeSeries::new(0.0, 1.0, Mat::zeros(0, 1)).is_err());
        let mut v = Mat::<f64>::zeros(2, 1);
        v[(1, 0)] = f64::NAN;
        assert!(TimeSeries::new(0.0, 1.0, v).is_err());
    }

    #[test]
    fn decimate_and_window_keep_grid() {
        let s = ramp(10);
        let d = s.decimate(3, 1).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.t0(), 1.5);
        assert_eq!(d.dt(), 1.5);
        assert_eq!(d.row(2), vec![7.0, 14.0]);
        let w = s.window(4, 3).unwrap();
        assert_eq!(w.t0(), 3.0);
        assert_eq!(w.row(0), vec![4.0, 8.0]);
        assert!(s.window(8, 3).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = TimeSeries::new(
            0.1,
            1.0 / 3.0,
            Mat::from_fn(5, 3, |i, j| (i as f64 + 0.1).sin() * 10f64.powi(j as i32 * 7 - 7)),
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2,x3\n"));
        let back = TimeSeries::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.values(), s.values());
        for k in 0..s.len() {
            assert!((back.time(k) - s.time(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_rejects_nonuniform_grid() {
        let text = "t,x1\n0,1\n1,2\n3,3\n";
        assert!(TimeSeries::read_csv(std::io::Cursor::new(text)).is_err());
    }
}
