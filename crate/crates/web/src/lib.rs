//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a JSON string; the plain functions in [`demo`] do the
//! work and are what the native tests exercise.

use wasm_bindgen::prelude::*;

pub mod demo {
    use msd::dynamics::{make_system, simulate_with_substeps, Dynamics, TimeSeries};
    use msd::harness::rmse;
    use msd::havok::{build_hankel, fit_dmd, HankelConfig};
    use msd::sindy::{fit_sindy, support_matches};
    use msd::Result;
    use serde::Serialize;

    const TRANSIENT: f64 = 10.0;
    /// Integration steps per period regardless of the output grid.
    const MIN_STEPS: f64 = 1024.0;

    fn trajectory(system: &str, rate: f64, periods: f64) -> Result<(msd::dynamics::SystemSpec, TimeSeries)> {
        let spec = make_system(system, &[])?;
        let substeps = (MIN_STEPS / rate).ceil().max(1.0) as usize;
        let series =
            simulate_with_substeps(&spec, &spec.default_initial_condition(), rate, periods, TRANSIENT, substeps)?;
        Ok((spec, series))
    }

    #[derive(Serialize)]
    pub struct Portrait {
        pub names: Vec<String>,
        pub x: Vec<f64>,
        pub y: Vec<f64>,
    }

    /// First two state components over `periods` periods.
    pub fn phase_portrait(system: &str, rate: f64, periods: f64) -> Result<Portrait> {
        let (spec, series) = trajectory(system, rate, periods)?;
        Ok(Portrait {
            names: spec.variable_names().into_iter().take(2).collect(),
            x: series.column(0),
            y: series.column(1),
        })
    }

    #[derive(Serialize)]
    pub struct Reconstruction {
        pub t: Vec<f64>,
        pub truth: Vec<f64>,
        pub prediction: Vec<f64>,
        /// Samples in the training record; the rest is forecast.
        pub train_len: usize,
        pub train_rmse: f64,
        pub test_rmse: f64,
    }

    /// Rank-`rank` delay DMD on the first component, trained on 5 periods and run 2 more.
    pub fn havok_reconstruction(system: &str, q: usize, rank: usize) -> Result<Reconstruction> {
        let rate = (q.max(2) - 1) as f64;
        let (_, series) = trajectory(system, rate, 7.0)?;
        let x = series.select(&[0])?;
        let train_len = (5.0 * rate).round() as usize;
        let pair = build_hankel(&x.window(0, train_len)?, &HankelConfig::standard(q, x.dt())?)?;
        let model = fit_dmd(&pair, rank)?.stabilize();
        let t = x.times();
        let prediction = model.predict(&t).col_as_slice(0).to_vec();
        let truth = x.column(0);
        Ok(Reconstruction {
            train_rmse: rmse(&prediction[..train_len], &truth[..train_len], true)?,
            test_rmse: rmse(&prediction[train_len..], &truth[train_len..], true)?,
            t,
            truth,
            prediction,
            train_len,
        })
    }

    #[derive(Serialize)]
    pub struct SindyFit {
        pub equations: Vec<String>,
        pub nonzero: usize,
        pub support_match: bool,
    }

    /// Cubic SINDy on one period of clean data.
    pub fn sindy_fit(system: &str, threshold: f64, rate: f64) -> Result<SindyFit> {
        let (spec, series) = trajectory(system, rate, 1.0)?;
        let model = fit_sindy(&series, threshold, 3)?;
        let names = spec.variable_names();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(SindyFit {
            equations: model.equations(&names),
            nonzero: model.nonzero_count(),
            support_match: support_matches(&model, &spec.true_support())?,
        })
    }
}

fn to_js<T: serde::Serialize>(r: msd::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn phase_portrait(system: &str, rate: f64, periods: f64) -> Result<String, JsError> {
    to_js(demo::phase_portrait(system, rate, periods))
}

#[wasm_bindgen]
pub fn havok_reconstruction(system: &str, q: usize, rank: usize) -> Result<String, JsError> {
    to_js(demo::havok_reconstruction(system, q, rank))
}

#[wasm_bindgen]
pub fn sindy_fit(system: &str, threshold: f64, rate: f64) -> Result<String, JsError> {
    to_js(demo::sindy_fit(system, threshold, rate))
}
