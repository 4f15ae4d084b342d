//! Experiment configuration and its `key = value` file format.
//!
//! One setting per line; blank lines and lines starting with `#` are
//! ignored. Keys mirror the fields of [`ExperimentConfig`]; optional keys
//! that are absent keep their defaults. `m_grid` is a comma-separated list.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::Params;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    HittingTimes,
    IsolatedDist,
    ValidateCount,
    ValidateContainment,
    UniformityProbe,
    SwitchingCensus,
    Enumerate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Simulate,
        ExperimentKind::HittingTimes,
        ExperimentKind::IsolatedDist,
        ExperimentKind::ValidateCount,
        ExperimentKind::ValidateContainment,
        ExperimentKind::UniformityProbe,
        ExperimentKind::SwitchingCensus,
        ExperimentKind::Enumerate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::HittingTimes => "hitting-times",
            ExperimentKind::IsolatedDist => "isolated-dist",
            ExperimentKind::ValidateCount => "validate-count",
            ExperimentKind::ValidateContainment => "validate-containment",
            ExperimentKind::UniformityProbe => "uniformity-probe",
            ExperimentKind::SwitchingCensus => "switching-census",
            ExperimentKind::Enumerate => "enumerate",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown experiment kind {s:?}")))
    }
}

/// Declared pass/fail thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Minimum fraction of trials with `tau_o = tau_c`.
    pub fraction_equal_min: f64,
    /// Minimum fraction of trials with `tau_c` in `[m_L, m_R]`.
    pub window_fraction_min: f64,
    /// Maximum total variation distance to the Poisson limit.
    pub tv_max: f64,
    /// Standard errors allowed in Monte Carlo comparisons.
    pub se_multiplier: f64,
    /// Multiple of the dropped-term magnitude allowed in comparisons.
    pub dropped_multiplier: f64,
    /// Relative error allowed against the leading-order count exponent.
    pub relative_tolerance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fraction_equal_min: 0.95,
            window_fraction_min: 0.95,
            tv_max: 0.05,
            se_multiplier: 3.0,
            dropped_multiplier: 10.0,
            relative_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: Params,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    /// Offset `c` in `m = (n/r)(ln n + c)`.
    pub c: f64,
    /// `omega` for the `[m_L, m_R]` window; `ln ln n` when absent.
    pub omega: Option<f64>,
    /// Fixed edge count.
    pub m: Option<u64>,
    pub m_grid: Vec<u64>,
    /// Size of the contained system `K`.
    pub k: u64,
    /// Monte Carlo sample count.
    pub samples: u64,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, params: Params) -> Self {
        ExperimentConfig {
            kind,
            params,
            trials: 100,
            seed: 1,
            threads: 1,
            c: 0.0,
            omega: None,
            m: None,
            m_grid: Vec::new(),
            k: 1,
            samples: 100_000,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if !self.c.is_finite() {
            return bad(format!("c = {} is not finite", self.c));
        }
        if let Some(w) = self.omega {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!("omega = {w} must be finite and >= 0"));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("fraction_equal_min", t.fraction_equal_min),
            ("window_fraction_min", t.window_fraction_min),
            ("tv_max", t.tv_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        for (name, v) in [
            ("se_multiplier", t.se_multiplier),
            ("dropped_multiplier", t.dropped_multiplier),
            ("relative_tolerance", t.relative_tolerance),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        let needs_trials = matches!(
            self.kind,
            ExperimentKind::Simulate
                | ExperimentKind::HittingTimes
                | ExperimentKind::IsolatedDist
                | ExperimentKind::UniformityProbe
        );
        if needs_trials && self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        match self.kind {
            ExperimentKind::ValidateCount if self.m_grid.is_empty() && self.m.is_none() => {
                bad("validate-count needs m or m_grid".into())
            }
            ExperimentKind::ValidateContainment | ExperimentKind::UniformityProbe | ExperimentKind::Enumerate
                if self.m.is_none() =>
            {
                bad(format!("{} needs m", self.kind.name()))
            }
            ExperimentKind::SwitchingCensus if self.m.is_none() => bad("switching-census needs m".into()),
            ExperimentKind::ValidateContainment if self.k > self.m.unwrap_or(0) => {
                bad(format!("k = {} exceeds m", self.k))
            }
            ExperimentKind::ValidateCount | ExperimentKind::ValidateContainment if self.samples == 0 => {
                bad("samples must be at least 1".into())
            }
            _ => Ok(()),
        }
    }

    /// The grid for formula validation: `m_grid`, or `[m]` when the grid is empty.
    pub fn grid(&self) -> Vec<u64> {
        if self.m_grid.is_empty() {
            self.m.into_iter().collect()
        } else {
            self.m_grid.clone()
        }
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let t = &self.tolerances;
        let _ = writeln!(s, "kind = {}", self.kind.name());
        let _ = writeln!(s, "n = {}", self.params.n());
        let _ = writeln!(s, "r = {}", self.params.r());
        let _ = writeln!(s, "ell = {}", self.params.ell());
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "c = {}", self.c);
        if let Some(w) = self.omega {
            let _ = writeln!(s, "omega = {w}");
        }
        if let Some(m) = self.m {
            let _ = writeln!(s, "m = {m}");
        }
        if !self.m_grid.is_empty() {
            let grid: Vec<String> = self.m_grid.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "m_grid = {}", grid.join(","));
        }
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "fraction_equal_min = {}", t.fraction_equal_min);
        let _ = writeln!(s, "window_fraction_min = {}", t.window_fraction_min);
        let _ = writeln!(s, "tv_max = {}", t.tv_max);
        let _ = writeln!(s, "se_multiplier = {}", t.se_multiplier);
        let _ = writeln!(s, "dropped_multiplier = {}", t.dropped_multiplier);
        let _ = writeln!(s, "relative_tolerance = {}", t.relative_tolerance);
        s
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut kind = None;
        let (mut n, mut r, mut ell) = (None, None, None);
        let mut rest = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kind" => kind = Some(value.parse::<ExperimentKind>().map_err(|e| parse_err(line_no, e))?),
                "n" => n = Some(num::<u32>(line_no, key, value)?),
                "r" => r = Some(num::<u32>(line_no, key, value)?),
                "ell" => ell = Some(num::<u32>(line_no, key, value)?),
                _ => rest.push((line_no, key.to_string(), value.to_string())),
            }
        }
        let missing = |k: &str| Error::Parse {
            line: 0,
            msg: format!("missing key {k}"),
        };
        let params = Params::new(n.ok_or_else(|| missing("n"))?, r.ok_or_else(|| missing("r"))?, ell.ok_or_else(|| missing("ell"))?)?;
        let mut cfg = ExperimentConfig::new(kind.ok_or_else(|| missing("kind"))?, params);
        for (line_no, key, value) in rest {
            let v = value.as_str();
            let t = &mut cfg.tolerances;
            match key.as_str() {
                "trials" => cfg.trials = num(line_no, &key, v)?,
                "seed" => cfg.seed = num(line_no, &key, v)?,
                "threads" => cfg.threads = num(line_no, &key, v)?,
                "c" => cfg.c = num(line_no, &key, v)?,
                "omega" => cfg.omega = Some(num(line_no, &key, v)?),
                "m" => cfg.m = Some(num(line_no, &key, v)?),
                "m_grid" => {
                    cfg.m_grid = v
                        .split(',')
                        .map(|x| num::<u64>(line_no, &key, x.trim()))
                        .collect::<Result<_>>()?
                }
                "k" => cfg.k = num(line_no, &key, v)?,
                "samples" => cfg.samples = num(line_no, &key, v)?,
                "fraction_equal_min" => t.fraction_equal_min = num(line_no, &key, v)?,
                "window_fraction_min" => t.window_fraction_min = num(line_no, &key, v)?,
                "tv_max" => t.tv_max = num(line_no, &key, v)?,
                "se_multiplier" => t.se_multiplier = num(line_no, &key, v)?,
                "dropped_multiplier" => t.dropped_multiplier = num(line_no, &key, v)?,
                "relative_tolerance" => t.relative_tolerance = num(line_no, &key, v)?,
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_err(line: usize, e: Error) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::Parse {
        line,
        msg: format!("bad value for {key}: {value:?} ({e})"),
    })
}
