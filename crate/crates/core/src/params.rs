use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Microparameters of the walk: lattice step and hop time.
///
/// Velocity, diffusivity and relaxation time are always derived from these
/// two, so they can never disagree with each other. The default is the
/// dimensionless lattice convention `dx = dt = 1`, i.e. `V = 1`, `D = 1/2`,
/// `tau = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    dx: f64,
    dt: f64,
}

#[derive(Deserialize)]
struct RawParams {
    dx: f64,
    dt: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.dx, raw.dt)
    }
}

impl Default for Params {
    fn default() -> Self {
        Self { dx: 1.0, dt: 1.0 }
    }
}

impl Params {
    pub fn new(dx: f64, dt: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Domain { func: "Params::new", value: dx, expected: "dx > 0" });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain { func: "Params::new", value: dt, expected: "dt > 0" });
        }
        Ok(Self { dx, dt })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Front speed `V = dx / dt`.
    pub fn velocity(&self) -> f64 {
        self.dx / self.dt
    }

    /// `D = dx² / (2 dt)`.
    pub fn diffusivity(&self) -> f64 {
        self.dx * self.dx / (2.0 * self.dt)
    }

    /// `tau = dt / 2`, equivalently `D / V²`.
    pub fn relaxation_time(&self) -> f64 {
        0.5 * self.dt
    }

    /// Gaussian spread `sqrt(2 D t)`.
    pub fn spread(&self, t: f64) -> f64 {
        (2.0 * self.diffusivity() * t).sqrt()
    }
}

/// Which candidate fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    /// Exact random-walk density (gamma-function continuation of the binomial law).
    #[serde(rename = "rw")]
    RandomWalk,
    /// Gaussian kernel of the diffusion equation.
    #[serde(rename = "g")]
    Gaussian,
    /// Fundamental solution of the telegraph equation.
    #[serde(rename = "te")]
    Telegraph,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::RandomWalk, Model::Gaussian, Model::Telegraph];

    pub fn tag(self) -> &'static str {
        match self {
            Model::RandomWalk => "rw",
            Model::Gaussian => "g",
            Model::Telegraph => "te",
        }
    }

    /// Whether the model vanishes identically outside `|x| <= V t`.
    pub fn has_front(self) -> bool {
        !matches!(self, Model::Gaussian)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rw" | "random-walk" => Ok(Model::RandomWalk),
            "g" | "gauss" | "gaussian" => Ok(Model::Gaussian),
            "te" | "telegraph" => Ok(Model::Telegraph),
            _ => Err(Error::UnknownTag(s.to_owned())),
        }
    }
}

/// What a sampled profile holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Density,
    Gradient,
    Flux,
}

impl Quantity {
    pub fn tag(self) -> &'static str {
        match self {
            Quantity::Density => "density",
            Quantity::Gradient => "gradient",
            Quantity::Flux => "flux",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "density" | "rho" => Ok(Quantity::Density),
            "gradient" | "grad" => Ok(Quantity::Gradient),
            "flux" | "j" => Ok(Quantity::Flux),
            _ => Err(Error::UnknownTag(s.to_owned())),
        }
    }
}
