//! Run configuration: a flat JSON file naming the flux, the data, the grid
//! and the switches for the optional pipeline stages. Unknown keys are
//! rejected so a typo fails loudly instead of silently running defaults.

use serde::Deserialize;

use crate::data::InitialData;
use crate::flux::FluxSpec;
use crate::godunov::Grid;

/// Flux selection: a catalog name like "burgers", or raw polynomial
/// coefficients in ascending degree.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FluxChoice {
    Catalog(String),
    Polynomial(Vec<f64>),
}

impl FluxChoice {
    pub fn build(&self, interval: (f64, f64)) -> Result<FluxSpec, String> {
        match self {
            FluxChoice::Catalog(name) => {
                FluxSpec::from_catalog(name, interval).map_err(|e| e.to_string())
            }
            FluxChoice::Polynomial(coeffs) => {
                FluxSpec::polynomial(coeffs, interval).map_err(|e| e.to_string())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            FluxChoice::Catalog(name) => name.clone(),
            FluxChoice::Polynomial(coeffs) => format!("polynomial(degree {})", coeffs.len().saturating_sub(1)),
        }
    }
}

fn default_cfl() -> f64 {
    0.9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub flux: FluxChoice,
    /// State interval [a, b] the flux is defined on; data must stay inside.
    pub interval: [f64; 2],
    pub initial_data: InitialData,
    /// Spatial domain [x_min, x_max]; h must divide its length.
    pub span: [f64; 2],
    pub h: f64,
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
    pub t_final: f64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub compare: bool,
    #[serde(default)]
    pub entropy_audit: bool,
    /// Entropy centers for the audit; defaults to {m, (m+M)/2, M} of the
    /// region actually spanned by the transformed data.
    #[serde(default)]
    pub entropy_centers: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Semantic checks beyond what deserialization enforces. Everything
    /// caught here is a user mistake, reported before any computation.
    pub fn validate(&self) -> Result<(), String> {
        let [a, b] = self.interval;
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(format!("interval [{a}, {b}] must be a finite increasing pair"));
        }
        let [lo, hi] = self.span;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(format!("span [{lo}, {hi}] must be a finite increasing pair"));
        }
        if !self.h.is_finite() || self.h <= 0.0 {
            return Err(format!("h must be positive, got {}", self.h));
        }
        Grid::from_span((lo, hi), self.h).map_err(|e| e.to_string())?;
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction < 1.0) {
            return Err(format!("cfl_fraction must lie in (0, 1), got {}", self.cfl_fraction));
        }
        if !self.t_final.is_finite() || self.t_final <= 0.0 {
            return Err(format!("t_final must be positive, got {}", self.t_final));
        }
        self.initial_data.check_shape().map_err(|e| format!("initial_data: {e}"))?;
        for f in self.initial_data.features() {
            if f <= lo || f >= hi {
                return Err(format!(
                    "initial_data feature at x = {f} must lie strictly inside the span [{lo}, {hi}]"
                ));
            }
        }
        let (dlo, dhi) = self.initial_data.range();
        if dlo < a || dhi > b {
            return Err(format!(
                "initial_data values span [{dlo}, {dhi}], outside the flux interval [{a}, {b}]"
            ));
        }
        if let Some(centers) = &self.entropy_centers {
            if centers.is_empty() {
                return Err("entropy_centers must not be empty when given".into());
            }
            if centers.iter().any(|c| !c.is_finite()) {
                return Err("entropy_centers contains a non-finite value".into());
            }
        }
        // Surface flux construction problems (unknown catalog name, bad
        // coefficient list) at validation time too.
        self.flux.build((a, b)).map_err(|e| format!("flux: {e}"))?;
        Ok(())
    }
}
