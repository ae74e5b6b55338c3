//! Linear-in-depth parameter schedules.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slope and intercept for the cost angles and for the mixer angles, in
/// radians. Layer `l` of a `p`-layer circuit uses
/// `gamma_l = gamma_slope * l / p + gamma_intcp` and likewise for `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub gamma_slope: f64,
    pub gamma_intcp: f64,
    pub beta_slope: f64,
    pub beta_intcp: f64,
}

impl LinearParams {
    /// Optimum reported for a random ±1 Ising instance with 16 nodes at edge
    /// density 0.6, `p = 8`, found with 2^14-shot estimates. The values are
    /// in half-angle gate units; see [`LinearParams::halved`].
    pub const ISING_N16_D060: LinearParams = LinearParams {
        gamma_slope: -0.376,
        gamma_intcp: -0.165,
        beta_slope: -0.881,
        beta_intcp: 0.913,
    };

    /// Optimum reported for a random ±1 Ising instance with 16 nodes at edge
    /// density 0.1, `p = 8`, in half-angle gate units.
    pub const ISING_N16_D010: LinearParams = LinearParams {
        gamma_slope: -0.790,
        gamma_intcp: -0.259,
        beta_slope: -0.697,
        beta_intcp: 0.792,
    };

    pub fn new(
        gamma_slope: f64,
        gamma_intcp: f64,
        beta_slope: f64,
        beta_intcp: f64,
    ) -> Result<Self> {
        LinearParams::from_array([gamma_slope, gamma_intcp, beta_slope, beta_intcp])
    }

    /// All four values divided by two. Converts angles quoted for
    /// `RZZ(gamma) = exp(-i gamma ZZ / 2)` and `RX(beta) = exp(-i beta X / 2)`
    /// gates into the full-angle units used here.
    pub fn halved(self) -> Self {
        LinearParams::from_array(self.to_array().map(|v| 0.5 * v)).expect("finite")
    }

    /// `[gamma_slope, gamma_intcp, beta_slope, beta_intcp]`.
    pub fn from_array(x: [f64; 4]) -> Result<Self> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "schedule parameter is not finite: {v}"
            )));
        }
        Ok(LinearParams {
            gamma_slope: x[0],
            gamma_intcp: x[1],
            beta_slope: x[2],
            beta_intcp: x[3],
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [
            self.gamma_slope,
            self.gamma_intcp,
            self.beta_slope,
            self.beta_intcp,
        ]
    }

    /// Per-layer angles for a `p`-layer circuit.
    pub fn materialize(&self, p: usize) -> Result<Schedule> {
        materialize(self, p)
    }
}

/// Names of the four coordinates, in [`LinearParams::to_array`] order.
pub const PARAM_NAMES: [&str; 4] = ["gamma_slope", "gamma_intcp", "beta_slope", "beta_intcp"];

/// Per-layer angles `(gamma_l, beta_l)`, `l = 0..p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl Schedule {
    /// Arbitrary per-layer angles. Both arrays must be non-empty, of equal
    /// length and finite.
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::invalid("schedule needs at least one layer"));
        }
        if gammas.len() != betas.len() {
            return Err(Error::LengthMismatch {
                expected: gammas.len(),
                found: betas.len(),
            });
        }
        if gammas.iter().chain(&betas).any(|v| !v.is_finite()) {
            return Err(Error::invalid("schedule angles must be finite"));
        }
        Ok(Schedule { gammas, betas })
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.betas.iter().copied())
    }

    /// Same schedule with every `gamma_l` multiplied by `factor`.
    pub fn scale_gammas(&self, factor: f64) -> Result<Schedule> {
        Schedule::new(
            self.gammas.iter().map(|g| g * factor).collect(),
            self.betas.clone(),
        )
    }
}

/// Expands linear parameters into `p` layers. The depth fraction is `l / p`,
/// so the last layer sits at `(p - 1) / p` and never reaches
/// `slope + intercept`.
pub fn materialize(params: &LinearParams, p: usize) -> Result<Schedule> {
    if p == 0 {
        return Err(Error::invalid("layer count p must be at least 1"));
    }
    let frac = |l: usize| l as f64 / p as f64;
    let gammas = (0..p)
        .map(|l| params.gamma_slope * frac(l) + params.gamma_intcp)
        .collect();
    let betas = (0..p)
        .map(|l| params.beta_slope * frac(l) + params.beta_intcp)
        .collect();
    Schedule::new(gammas, betas)
}

/// Params file: the four scalars plus an optional label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub params: LinearParams,
}

impl ParamsDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ParamsDocument = serde_json::from_str(text)?;
        LinearParams::from_array(doc.params.to_array())?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn first_and_last_layer_of_reference_params() {
        let s = materialize(&LinearParams::ISING_N16_D060, 8).unwrap();
        assert_eq!(s.p(), 8);
        assert_eq!(s.gammas()[0], -0.165);
        assert_eq!(s.betas()[0], 0.913);
        // -0.376 * 7/8 - 0.165 and -0.881 * 7/8 + 0.913
        assert!(close(s.gammas()[7], -0.494));
        assert!(close(s.betas()[7], 0.142125));
    }

    #[test]
    fn zero_slopes_give_constant_schedule() {
        let s = materialize(&LinearParams::new(0.0, 0.3, 0.0, -0.2).unwrap(), 5).unwrap();
        assert!(s.gammas().iter().all(|&g| g == 0.3));
        assert!(s.betas().iter().all(|&b| b == -0.2));
    }

    #[test]
    fn single_layer_ignores_slopes() {
        let s = materialize(&LinearParams::new(5.0, 0.3, -7.0, -0.2).unwrap(), 1).unwrap();
        assert_eq!((s.gammas(), s.betas()), (&[0.3][..], &[-0.2][..]));
    }

    #[test]
    fn constant_increments() {
        let params = LinearParams::new(1.3, -0.4, -0.9, 0.7).unwrap();
        let s = materialize(&params, 6).unwrap();
        for w in s.gammas().windows(2) {
            assert!((w[1] - w[0] - 1.3 / 6.0).abs() < 1e-12);
        }
        for w in s.betas().windows(2) {
            assert!((w[1] - w[0] + 0.9 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(materialize(&LinearParams::ISING_N16_D060, 0).is_err());
        assert!(LinearParams::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(Schedule::new(vec![0.1], vec![0.1, 0.2]).is_err());
        assert!(Schedule::new(vec![], vec![]).is_err());
    }

    #[test]
    fn params_document_round_trip() {
        let doc = ParamsDocument {
            label: Some("n16 d0.6".into()),
            params: LinearParams::ISING_N16_D060,
        };
        let text = doc.to_json();
        assert!(text.contains("\"gamma_slope\": -0.376"));
        assert_eq!(ParamsDocument::from_json(&text).unwrap(), doc);
        let bare = r#"{"gamma_slope": 1, "gamma_intcp": 2, "beta_slope": 3, "beta_intcp": 4}"#;
        let parsed = ParamsDocument::from_json(bare).unwrap();
        assert_eq!(parsed.label, None);
        assert_eq!(parsed.params.to_array(), [1.0, 2.0, 3.0, 4.0]);
    }
}
