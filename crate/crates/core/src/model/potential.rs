use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::CubicSpline;

/// Shape of the potential `q`.
///
/// Gaussian: `amplitude * exp(-(x - center)^2 / (2 width^2))`.
/// Sech2: `amplitude * sech^2((x - center) / width)`.
/// Polynomial: `Σ coefficients[k] x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialKind {
    Zero,
    Constant {
        value: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    Sech2 {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    Polynomial {
        coefficients: Vec<f64>,
    },
    Tabulated {
        x: Vec<f64>,
        q: Vec<f64>,
    },
}

/// A potential together with the radius `L` of the interval `[-L, L]` on
/// which it may be evaluated.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    support: f64,
    spline: Option<CubicSpline>,
    /// `∫_{x_0}^{0}` of the spline, so that `Q(x)` is anchored at zero.
    spline_origin: f64,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.support == other.support
    }
}

impl Potential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        Self::with_support(kind, None)
    }

    /// `support = None` means: unbounded for analytic kinds, the table range
    /// for tabulated data.
    pub fn with_support(kind: PotentialKind, support: Option<f64>) -> Result<Self> {
        let mut spline = None;
        let mut spline_origin = 0.0;
        let natural = match &kind {
            PotentialKind::Zero => f64::INFINITY,
            PotentialKind::Constant { value } => {
                check_finite("value", *value)?;
                f64::INFINITY
            }
            PotentialKind::Gaussian { amplitude, width, center }
            | PotentialKind::Sech2 { amplitude, width, center } => {
                check_finite("amplitude", *amplitude)?;
                check_finite("center", *center)?;
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::config(format!("potential width must be positive, got {width}")));
                }
                f64::INFINITY
            }
            PotentialKind::Polynomial { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::config("polynomial coefficients must be finite"));
                }
                f64::INFINITY
            }
            PotentialKind::Tabulated { x, q } => {
                let s = CubicSpline::natural(x, q)?;
                let (lo, hi) = s.domain();
                if lo > 0.0 || hi < 0.0 {
                    return Err(Error::config("tabulated potential must contain x = 0"));
                }
                spline_origin = s.integral_from_start(0.0);
                spline = Some(s);
                (-lo).min(hi)
            }
        };
        let support = match support {
            Some(l) if l.is_nan() || l <= 0.0 => return Err(Error::config(format!("support radius must be positive, got {l}"))),
            Some(l) if l > natural => {
                return Err(Error::config(format!("support radius {l} exceeds the tabulated range {natural}")))
            }
            Some(l) => l,
            None => natural,
        };
        Ok(Self { kind, support, spline, spline_origin })
    }

    pub fn zero() -> Self {
        Self::new(PotentialKind::Zero).expect("zero potential is valid")
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(PotentialKind::Constant { value })
    }

    pub fn gaussian(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        Self::new(PotentialKind::Gaussian { amplitude, width, center })
    }

    pub fn sech2(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        Self::new(PotentialKind::Sech2 { amplitude, width, center })
    }

    /// Tabulates `f` on `n + 1` uniform points of `[-radius, radius]`.
    pub fn tabulate(radius: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let x: Vec<f64> = (0..=n).map(|k| -radius + 2.0 * radius * k as f64 / n as f64).collect();
        let q = x.iter().map(|&v| f(v)).collect();
        Self::new(PotentialKind::Tabulated { x, q })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::Constant { value } => *value == 0.0,
            PotentialKind::Gaussian { amplitude, .. } | PotentialKind::Sech2 { amplitude, .. } => *amplitude == 0.0,
            PotentialKind::Polynomial { coefficients } => coefficients.iter().all(|c| *c == 0.0),
            PotentialKind::Tabulated { q, .. } => q.iter().all(|v| *v == 0.0),
        }
    }

    /// Fails unless `[-radius, radius]` lies inside the support.
    pub fn require_support(&self, radius: f64) -> Result<()> {
        if radius > self.support * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "potential is supported on [-{}, {}] but [-{radius}, {radius}] is needed",
                self.support, self.support
            )));
        }
        Ok(())
    }

    fn check(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x.abs() > self.support * (1.0 + 1e-12) {
            return Err(Error::domain(format!("x = {x} lies outside the support radius {}", self.support)));
        }
        Ok(())
    }

    /// `q(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.value(x))
    }

    /// `Q(x) = ∫_0^x q`.
    pub fn cumint(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.antiderivative(x))
    }

    /// Unchecked evaluation for inner loops whose range was validated once.
    pub(crate) fn value(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant { value } => *value,
            PotentialKind::Gaussian { amplitude, width, center } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            PotentialKind::Sech2 { amplitude, width, center } => {
                let c = ((x - center) / width).cosh();
                amplitude / (c * c)
            }
            PotentialKind::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c),
            PotentialKind::Tabulated { .. } => self.spline.as_ref().map_or(0.0, |s| s.eval(x)),
        }
    }

    pub(crate) fn antiderivative(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant { value } => value * x,
            PotentialKind::Gaussian { amplitude, width, center } => {
                let s = width * std::f64::consts::SQRT_2;
                amplitude * width * (PI / 2.0).sqrt() * (libm::erf((x - center) / s) - libm::erf(-center / s))
            }
            PotentialKind::Sech2 { amplitude, width, center } => {
                amplitude * width * (((x - center) / width).tanh() - (-center / width).tanh())
            }
            PotentialKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + c / (k as f64 + 1.0))
                * x,
            PotentialKind::Tabulated { .. } => self
                .spline
                .as_ref()
                .map_or(0.0, |s| s.integral_from_start(x) - self.spline_origin),
        }
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("potential {name} must be finite")))
    }
}

// The JSON form is the tagged kind plus an optional "support" key.
impl Serialize for Potential {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut value = serde_json::to_value(&self.kind).map_err(serde::ser::Error::custom)?;
        if self.support.is_finite() && !matches!(self.kind, PotentialKind::Tabulated { .. }) {
            value
                .as_object_mut()
                .expect("tagged enum serializes to an object")
                .insert("support".into(), self.support.into());
        }
        value.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Potential {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut value = serde_json::Value::deserialize(deserializer)?;
        let support = match value.as_object_mut() {
            Some(map) => match map.remove("support") {
                Some(v) => Some(v.as_f64().ok_or_else(|| D::Error::custom("support must be a number"))?),
                None => None,
            },
            None => return Err(D::Error::custom("potential must be an object")),
        };
        let kind: PotentialKind = serde_json::from_value(value).map_err(D::Error::custom)?;
        Potential::with_support(kind, support).map_err(D::Error::custom)
    }
}
