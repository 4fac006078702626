//! Parameter sweeps over temperature or `alpha`, evaluated in parallel and
//! emitted as CSV in grid order.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::generator_for;
use crate::error::{Error, Result};
use crate::noise::{
    fano_from_parts, fano_nophonon, fano_quadrature, jump_map, triplet_current_and_fano, NoiseResult, DEFAULT_QUADRATURE_TOL,
};
use crate::params::ModelParams;
use crate::scalar::Real;

pub const CSV_HEADER: &str = "variable,value,fano,fano_nophonon,current_e_per_ns,S0,p0,p1,p2,method";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Temperature,
    Alpha,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Temperature => "temperature",
            SweepVariable::Alpha => "alpha",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "temperature" | "T" => Ok(SweepVariable::Temperature),
            "alpha" => Ok(SweepVariable::Alpha),
            other => Err(format!("expected `temperature` or `alpha`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMethod {
    #[default]
    Resolvent,
    Quadrature,
    /// One resolvent and one quadrature row per grid point.
    Both,
}

impl FromStr for SweepMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "resolvent" => Ok(SweepMethod::Resolvent),
            "quadrature" => Ok(SweepMethod::Quadrature),
            "both" => Ok(SweepMethod::Both),
            other => Err(format!("expected `resolvent`, `quadrature` or `both`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T: Real = f64> {
    pub variable: SweepVariable,
    pub start: T,
    pub stop: T,
    /// Grid size including both endpoints.
    pub points: usize,
    pub fixed: ModelParams<T>,
    pub include_nophonon_reference: bool,
    pub method: SweepMethod,
    /// Append a triplet-sector row (Poissonian, `F = 1`).
    pub include_triplet: bool,
}

impl<T: Real> SweepSpec<T> {
    /// 0–40 K in 0.5 K steps.
    pub fn temperature_default(fixed: ModelParams<T>) -> Self {
        Self::new(SweepVariable::Temperature, T::zero(), T::lit(40.0), 81, fixed)
    }

    /// 0.05–8 in steps of 0.05.
    pub fn alpha_default(fixed: ModelParams<T>) -> Self {
        Self::new(SweepVariable::Alpha, T::lit(0.05), T::lit(8.0), 160, fixed)
    }

    pub fn new(variable: SweepVariable, start: T, stop: T, points: usize, fixed: ModelParams<T>) -> Self {
        Self {
            variable,
            start,
            stop,
            points,
            fixed,
            include_nophonon_reference: false,
            method: SweepMethod::Resolvent,
            include_triplet: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || !(self.start < self.stop) {
            return Err(Error::InvalidArgument(format!("sweep needs start < stop, got {} and {}", self.start, self.stop)));
        }
        if self.points < 2 {
            return Err(Error::InvalidArgument(format!("sweep needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    /// Linear grid including both endpoints exactly.
    pub fn grid(&self) -> Vec<T> {
        let n = self.points - 1;
        let step = (self.stop - self.start) / T::lit(n as f64);
        (0..=n).map(|k| if k == n { self.stop } else { self.start + step * T::lit(k as f64) }).collect()
    }

    fn params_at(&self, value: T) -> ModelParams<T> {
        match self.variable {
            SweepVariable::Temperature => self.fixed.with_temperature(value),
            SweepVariable::Alpha => self.fixed.with_alpha(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<T: Real = f64> {
    pub variable: &'static str,
    pub value: T,
    pub fano: T,
    pub fano_nophonon: Option<T>,
    pub current: T,
    pub s0: T,
    pub populations: [T; 3],
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRecord<T: Real = f64> {
    Row(SweepRow<T>),
    Failed { variable: &'static str, value: T, error: Error },
}

impl<T: Real> SweepRecord<T> {
    pub fn row(&self) -> Option<&SweepRow<T>> {
        match self {
            SweepRecord::Row(r) => Some(r),
            SweepRecord::Failed { .. } => None,
        }
    }

    pub fn error(&self) -> Option<&Error> {
        match self {
            SweepRecord::Row(_) => None,
            SweepRecord::Failed { error, .. } => Some(error),
        }
    }
}

fn evaluate_point<T: Real>(spec: &SweepSpec<T>, value: T) -> Result<Vec<SweepRow<T>>> {
    let p = spec.params_at(value);
    p.validate()?;
    let (ops, l) = generator_for(&p)?;
    let jm = jump_map(&ops);
    let (resolvent, rho) = fano_from_parts(&l, &jm)?;
    let fano_np = if spec.include_nophonon_reference { Some(fano_nophonon(&p)?.fano) } else { None };
    let populations = rho.populations();
    let row = |nr: &NoiseResult<T>| SweepRow {
        variable: spec.variable.as_str(),
        value,
        fano: nr.fano,
        fano_nophonon: fano_np,
        current: nr.current,
        s0: nr.s0,
        populations,
        method: nr.method.as_str(),
    };
    let mut rows = Vec::with_capacity(2);
    if matches!(spec.method, SweepMethod::Resolvent | SweepMethod::Both) {
        rows.push(row(&resolvent));
    }
    if matches!(spec.method, SweepMethod::Quadrature | SweepMethod::Both) {
        rows.push(row(&fano_quadrature(&p, None, T::lit(DEFAULT_QUADRATURE_TOL))?));
    }
    for r in &rows {
        let finite = [r.fano, r.current, r.s0].iter().chain(&r.populations).chain(&r.fano_nophonon).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(format!("non-finite result at {} = {}", r.variable, value)));
        }
    }
    Ok(rows)
}

/// Evaluates every grid point in parallel. A failing point becomes a
/// [`SweepRecord::Failed`] and the remaining points are still computed.
pub fn run_sweep<T: Real>(spec: &SweepSpec<T>) -> Result<Vec<SweepRecord<T>>> {
    spec.validate()?;
    let per_point: Vec<Vec<SweepRecord<T>>> = spec
        .grid()
        .into_par_iter()
        .map(|value| match evaluate_point(spec, value) {
            Ok(rows) => rows.into_iter().map(SweepRecord::Row).collect(),
            Err(error) => vec![SweepRecord::Failed { variable: spec.variable.as_str(), value, error }],
        })
        .collect();
    let mut records: Vec<SweepRecord<T>> = per_point.into_iter().flatten().collect();
    if spec.include_triplet {
        records.push(match triplet_current_and_fano(&spec.fixed) {
            Ok(nr) => SweepRecord::Row(SweepRow {
                variable: "triplet",
                value: T::zero(),
                fano: nr.fano,
                fano_nophonon: None,
                current: nr.current,
                s0: nr.s0,
                populations: [T::nan(); 3],
                method: nr.method.as_str(),
            }),
            Err(error) => SweepRecord::Failed { variable: "triplet", value: T::zero(), error },
        });
    }
    Ok(records)
}

fn opt<T: Real>(x: Option<T>) -> String {
    match x {
        Some(v) if !v.is_nan() => v.to_string(),
        _ => String::new(),
    }
}

/// Writes the header and one line per record. Failed points keep their
/// `variable,value` prefix, leave numeric columns empty and put
/// `error: <message>` in the method column.
pub fn write_csv<T: Real>(records: &[SweepRecord<T>], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for rec in records {
        match rec {
            SweepRecord::Row(r) => {
                let [p0, p1, p2] = r.populations.map(Some);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.variable,
                    r.value,
                    r.fano,
                    opt(r.fano_nophonon),
                    r.current,
                    r.s0,
                    opt(p0),
                    opt(p1),
                    opt(p2),
                    r.method
                )?;
            }
            SweepRecord::Failed { variable, value, error } => {
                let msg = error.to_string().replace('"', "'");
                writeln!(w, "{variable},{value},,,,,,,,\"error: {msg}\"")?;
            }
        }
    }
    Ok(())
}
