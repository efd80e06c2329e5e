//! Resolved run configuration: a JSON file merged with command line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weingarten::integrator::StepControl;
use weingarten::mobius::{Branch, CalibrationChoice};
use weingarten::variational::FSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub relation: Option<String>,
    pub theta0: f64,
    pub r1: Option<f64>,
    /// Integration interval [a, b].
    pub interval: [f64; 2],
    pub step: StepControl,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// Row-major [a, b, c, d] with ad − bc = 1.
    pub matrix: Option<[f64; 4]>,
    pub calibration: CalibrationChoice,
    pub branch: Branch,
    /// l0, l1 or general.
    pub lagrangian: String,
    pub f: FSpec,
    /// Sub-interval on which the variational checks run.
    pub window: [f64; 2],
    pub samples: usize,
    /// Random perturbations tried on top of the sine basis.
    pub combos: usize,
    pub segments: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            relation: None,
            theta0: std::f64::consts::FRAC_PI_2,
            r1: None,
            interval: [0.0, PI],
            step: StepControl::default(),
            input: None,
            output: None,
            report: None,
            matrix: None,
            calibration: CalibrationChoice::Auto,
            branch: Branch::Standard,
            lagrangian: "l0".into(),
            f: FSpec::one(),
            window: [0.3, 1.2],
            samples: 200,
            combos: 40,
            segments: 64,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}

/// "auto" or a nonzero number.
pub fn parse_calibration(s: &str) -> Result<CalibrationChoice, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(CalibrationChoice::Auto);
    }
    s.parse::<f64>().map(CalibrationChoice::Fixed).map_err(|_| format!("calibration must be 'auto' or a number, got '{s}'"))
}

pub fn parse_branch(s: &str) -> Result<Branch, String> {
    match s {
        "standard" => Ok(Branch::Standard),
        "reversed" => Ok(Branch::Reversed),
        _ => Err(format!("branch must be 'standard' or 'reversed', got '{s}'")),
    }
}

/// Comma separated floats of a fixed count.
pub fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{}' is not a number", x.trim())))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma separated numbers, got {}", v.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let c = RunConfig {
            relation: Some("r2 = 0.1*r1 + 3".into()),
            theta0: 0.1 + 0.2,
            r1: Some(1.0 / 3.0),
            matrix: Some([1.0, 0.3, 0.4, 1.12]),
            calibration: CalibrationChoice::Fixed(std::f64::consts::E),
            branch: Branch::Reversed,
            f: FSpec::i_power(0.5),
            seed: u64::MAX,
            ..Default::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        assert_eq!(serde_json::from_str::<RunConfig>("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"relaton": "k1 = 1"}"#).is_err());
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_list::<4>("1,2,0,1").unwrap(), [1.0, 2.0, 0.0, 1.0]);
        assert_eq!(parse_list::<2>("[0.2, 1]").unwrap(), [0.2, 1.0]);
        assert!(parse_list::<4>("1,2,3").is_err());
        assert_eq!(parse_calibration("AUTO").unwrap(), CalibrationChoice::Auto);
        assert_eq!(parse_calibration("-0.5").unwrap(), CalibrationChoice::Fixed(-0.5));
        assert!(parse_branch("north").is_err());
    }
}
