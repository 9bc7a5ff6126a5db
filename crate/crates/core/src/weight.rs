//! Admissible weights: constants, radial powers, and bounded continuous samples.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ensure_finite, CirclePoint, GEOMETRY_TOL};

pub type WeightFn = Arc<dyn Fn(CirclePoint) -> f64 + Send + Sync>;

/// Where a sampled weight is known to be continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Continuity {
    /// No continuity information.
    Unknown,
    /// Continuous on the whole closure.
    Everywhere,
    /// Extends continuously to `point` with the given positive value.
    At { point: CirclePoint, value: f64 },
}

#[derive(Clone)]
pub enum WeightFamily {
    Constant(f64),
    /// `coefficient * |z - center|^exponent`.
    RadialPower { center: CirclePoint, exponent: f64, coefficient: f64 },
    /// A bounded continuous function with an essential lower bound.
    ContinuousSample { name: String, eval: WeightFn, lower_bound: f64, continuity: Continuity },
}

impl fmt::Debug for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Constant(c) => write!(f, "Constant({c})"),
            WeightFamily::RadialPower { center, exponent, coefficient } => {
                write!(f, "RadialPower({coefficient} |z - {center}|^{exponent})")
            }
            WeightFamily::ContinuousSample { name, lower_bound, continuity, .. } => {
                write!(f, "ContinuousSample({name}, >= {lower_bound}, {continuity:?})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Weight {
    family: WeightFamily,
    is_l1: bool,
    is_linf: bool,
}

impl Weight {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidWeight(format!("constant {c} must be positive and finite")));
        }
        Ok(Weight { family: WeightFamily::Constant(c), is_l1: true, is_linf: true })
    }

    pub fn unit() -> Self {
        Weight { family: WeightFamily::Constant(1.0), is_l1: true, is_linf: true }
    }

    pub fn radial_power(center: CirclePoint, exponent: f64) -> Result<Self> {
        ensure_finite(center)?;
        if !(exponent.is_finite() && exponent > -2.0) {
            return Err(Error::InvalidWeight(format!("radial exponent {exponent} must exceed -2")));
        }
        Ok(Weight {
            family: WeightFamily::RadialPower { center, exponent, coefficient: 1.0 },
            is_l1: true,
            is_linf: exponent >= 0.0,
        })
    }

    pub fn continuous(
        name: impl Into<String>,
        eval: WeightFn,
        lower_bound: f64,
        continuity: Continuity,
    ) -> Result<Self> {
        if !(lower_bound.is_finite() && lower_bound > 0.0) {
            return Err(Error::InvalidWeight(format!("lower bound {lower_bound} must be positive")));
        }
        if let Continuity::At { point, value } = continuity {
            ensure_finite(point)?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidWeight(format!("value {value} at continuity point must be positive")));
            }
        }
        Ok(Weight {
            family: WeightFamily::ContinuousSample { name: name.into(), eval, lower_bound, continuity },
            is_l1: true,
            is_linf: true,
        })
    }

    /// Built-in sampled weights reachable by name from configs.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            // Positive on the closed unit disc, minimum 1 at z = -1.
            "two-plus-re" => Self::continuous("two-plus-re", Arc::new(|z: Complex64| 2.0 + z.re), 1.0, Continuity::Everywhere),
            "one-plus-abs2" => {
                Self::continuous("one-plus-abs2", Arc::new(|z: Complex64| 1.0 + z.norm_sqr()), 1.0, Continuity::Everywhere)
            }
            _ => Err(Error::InvalidWeight(format!("unknown builtin weight '{name}'"))),
        }
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn is_l1(&self) -> bool {
        self.is_l1
    }

    pub fn is_linf(&self) -> bool {
        self.is_linf
    }

    pub fn eval(&self, z: CirclePoint) -> f64 {
        match &self.family {
            WeightFamily::Constant(c) => *c,
            WeightFamily::RadialPower { center, exponent, coefficient } => {
                coefficient * (z - center).norm().powf(*exponent)
            }
            WeightFamily::ContinuousSample { eval, .. } => eval(z),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, WeightFamily::Constant(_))
    }

    /// `c * mu`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidWeight(format!("scale {c} must be positive")));
        }
        let family = match &self.family {
            WeightFamily::Constant(k) => WeightFamily::Constant(c * k),
            WeightFamily::RadialPower { center, exponent, coefficient } => {
                WeightFamily::RadialPower { center: *center, exponent: *exponent, coefficient: c * coefficient }
            }
            WeightFamily::ContinuousSample { name, eval, lower_bound, continuity } => {
                let inner = eval.clone();
                let continuity = match *continuity {
                    Continuity::At { point, value } => Continuity::At { point, value: c * value },
                    other => other,
                };
                WeightFamily::ContinuousSample {
                    name: format!("{c}*{name}"),
                    eval: Arc::new(move |z| c * inner(z)),
                    lower_bound: c * lower_bound,
                    continuity,
                }
            }
        };
        Ok(Weight { family, ..self.clone() })
    }

    /// `nu(p)` for a point where the weight is known to extend continuously.
    pub fn value_at_continuity_point(&self, p: CirclePoint) -> Result<f64> {
        ensure_finite(p)?;
        let missing = Error::MissingContinuityPoint { re: p.re, im: p.im };
        match &self.family {
            WeightFamily::Constant(c) => Ok(*c),
            WeightFamily::RadialPower { center, .. } => {
                if (p - center).norm() > GEOMETRY_TOL {
                    Ok(self.eval(p))
                } else {
                    Err(missing)
                }
            }
            WeightFamily::ContinuousSample { eval, continuity, .. } => match *continuity {
                Continuity::Everywhere => Ok(eval(p)),
                Continuity::At { point, value } if (point - p).norm() <= GEOMETRY_TOL => Ok(value),
                _ => Err(missing),
            },
        }
    }

    /// `nu o f`, with metadata carried through `f^{-1}` for continuity points.
    pub(crate) fn composed(
        &self,
        name: &str,
        f: Arc<dyn Fn(CirclePoint) -> CirclePoint + Send + Sync>,
        f_inv: impl Fn(CirclePoint) -> CirclePoint,
    ) -> Self {
        match &self.family {
            WeightFamily::Constant(_) => self.clone(),
            family => {
                let base = self.clone();
                let continuity = match family {
                    WeightFamily::ContinuousSample { continuity: Continuity::At { point, value }, .. } => {
                        Continuity::At { point: f_inv(*point), value: *value }
                    }
                    WeightFamily::ContinuousSample { continuity, .. } => *continuity,
                    _ => Continuity::Everywhere,
                };
                let lower_bound = match family {
                    WeightFamily::ContinuousSample { lower_bound, .. } => *lower_bound,
                    _ => f64::MIN_POSITIVE,
                };
                let label = format!("{name}*({:?})", family);
                Weight {
                    family: WeightFamily::ContinuousSample {
                        name: label,
                        eval: Arc::new(move |z| base.eval(f(z))),
                        lower_bound,
                        continuity,
                    },
                    is_l1: true,
                    is_linf: self.is_linf,
                }
            }
        }
    }
}
