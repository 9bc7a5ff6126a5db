//! JSON experiment configs and the shared domain/weight spec syntax.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use rbl_core::geometry::Disc;
use rbl_core::{CircleDomain, Weight};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] rbl_core::Error),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        Complex64::new(c.re, c.im)
    }
}

impl From<Complex64> for ComplexSpec {
    fn from(c: Complex64) -> Self {
        ComplexSpec { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub center: ComplexSpec,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RamadanovInc,
    RamadanovDec,
    Localization,
    Boundary,
    Scaling,
    Eval,
    Check,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| invalid(format!("unknown experiment kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Closed form on the unit disc with a constant weight and no cap given.
    #[default]
    Auto,
    ClosedForm,
    Gram,
}

/// Flat experiment description; every field is optional and defaults per kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    /// `disc`, `disc:cx,cy,r` or `annulus:inner`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<HoleSpec>,
    /// `const:c`, `rpow:cx,cy,alpha` or `cont:name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_radial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_angular: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<ComplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<ComplexSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_radial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_angular: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ComplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ComplexSpec>,
    /// `n-1` or a derivative order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deriv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg_out: Option<PathBuf>,
}

/// Below this cap the run proceeds but is flagged as under-resolved.
pub const RECOMMENDED_MIN_CAP: usize = 8;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == Some(0) {
            return Err(invalid("n must be >= 1"));
        }
        if self.basis_cap == Some(0) || self.hole_cap == Some(0) {
            return Err(invalid("basis caps must be >= 1"));
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(invalid(format!("tolerance {t} must be positive")));
            }
        }
        for path in [&self.csv_out, &self.json_out, &self.svg_out].into_iter().flatten() {
            check_writable(path)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(1)
    }

    pub fn domain(&self) -> Result<CircleDomain, ConfigError> {
        let holes: Vec<Disc> =
            self.holes.iter().map(|h| Disc::new(h.center.into(), h.radius)).collect::<Result<_, _>>()?;
        parse_domain(self.domain.as_deref().unwrap_or("disc"), holes)
    }

    pub fn weight(&self) -> Result<Weight, ConfigError> {
        match &self.weight {
            None => Ok(Weight::unit()),
            Some(s) => parse_weight(s),
        }
    }

    pub fn anchor(&self) -> Complex64 {
        self.anchor.map(Into::into).unwrap_or(Complex64::new(1.0, 0.0))
    }

    pub fn under_resolved(&self) -> bool {
        self.basis_cap.is_some_and(|n| n < RECOMMENDED_MIN_CAP)
    }
}

fn check_writable(path: &Path) -> Result<(), ConfigError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(invalid(format!("output directory {} does not exist", parent.display())));
    }
    if path.is_dir() {
        return Err(invalid(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}

fn numbers(s: &str, count: usize, what: &str) -> Result<Vec<f64>, ConfigError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(format!("{what}: expected {count} comma-separated numbers, got '{s}'")))?;
    if v.len() != count {
        return Err(invalid(format!("{what}: expected {count} comma-separated numbers, got '{s}'")));
    }
    Ok(v)
}

/// `disc`, `disc:cx,cy,r`, `annulus:inner`; extra holes are added to the outer disc.
pub fn parse_domain(spec: &str, mut holes: Vec<Disc>) -> Result<CircleDomain, ConfigError> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let outer = match (kind, args) {
        ("disc", "") => Disc::unit(),
        ("disc", a) => {
            let v = numbers(a, 3, "disc")?;
            Disc::new(Complex64::new(v[0], v[1]), v[2])?
        }
        ("annulus", a) => {
            let v = numbers(a, 1, "annulus")?;
            holes.insert(0, Disc::new(Complex64::new(0.0, 0.0), v[0])?);
            Disc::unit()
        }
        _ => return Err(invalid(format!("unknown domain '{spec}' (use disc, disc:cx,cy,r or annulus:inner)"))),
    };
    Ok(CircleDomain::new(outer, holes)?)
}

/// `cx,cy,r`.
pub fn parse_hole(spec: &str) -> Result<Disc, ConfigError> {
    let v = numbers(spec, 3, "hole")?;
    Ok(Disc::new(Complex64::new(v[0], v[1]), v[2])?)
}

pub fn parse_weight(spec: &str) -> Result<Weight, ConfigError> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "unit" if args.is_empty() => Ok(Weight::unit()),
        "const" => Ok(Weight::constant(numbers(args, 1, "const weight")?[0])?),
        "rpow" => {
            let v = numbers(args, 3, "rpow weight")?;
            Ok(Weight::radial_power(Complex64::new(v[0], v[1]), v[2])?)
        }
        "cont" => Ok(Weight::builtin(args)?),
        _ => Err(invalid(format!("unknown weight '{spec}' (use const:c, rpow:cx,cy,alpha or cont:name)"))),
    }
}

/// `r,a`.
pub fn parse_quad(spec: &str) -> Result<(usize, usize), ConfigError> {
    let err = || invalid(format!("quadrature: expected 'radial,angular', got '{spec}'"));
    let (r, a) = spec.split_once(',').ok_or_else(err)?;
    Ok((r.trim().parse().map_err(|_| err())?, a.trim().parse().map_err(|_| err())?))
}

/// `a+bi`, `a-bi`, `a`, `bi`, or `re,im`.
pub fn parse_complex(spec: &str) -> Result<Complex64, ConfigError> {
    let s = spec.trim();
    let err = || invalid(format!("cannot parse complex number '{spec}'"));
    if let Some((re, im)) = s.split_once(',') {
        return Ok(Complex64::new(re.trim().parse().map_err(|_| err())?, im.trim().parse().map_err(|_| err())?));
    }
    s.parse::<Complex64>().map_err(|_| err())
}
