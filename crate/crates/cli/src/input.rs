use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use torusforge::lift::parse_rational;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    #[serde(rename = "P")]
    pub p: String,
    #[serde(rename = "Q")]
    pub q: String,
    #[serde(rename = "R")]
    pub r: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerturbationDoc {
    Simple { simple: bool },
    Explicit {
        #[serde(rename = "U")]
        u: String,
        #[serde(rename = "V")]
        v: String,
        #[serde(rename = "W")]
        w: String,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    /// Integration horizon for `simulate`.
    pub t_end: Option<f64>,
    /// Initial point for `simulate`, in the original coordinates.
    pub x0: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
    /// Relative Fourier residual at which a torus seed counts as settled.
    pub settle: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDoc {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftDoc {
    /// Exact rational such as "-48" or "-3/2"; a `z^3` term in `R` is solved for to hit it.
    pub l1_target: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub system: SystemDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Parameters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Ball the lift's separating plane must avoid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftDoc>,
}

pub struct LoadedInput {
    pub doc: InputDoc,
    pub sha256: String,
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Schema(format!("{name} must be a positive number, got {x}"))),
        _ => Ok(()),
    }
}

pub fn parse_input(bytes: &[u8]) -> Result<LoadedInput, CliError> {
    let doc: InputDoc = serde_json::from_slice(bytes).map_err(|e| CliError::Schema(format!("input document: {e}")))?;
    if let Some(PerturbationDoc::Simple { simple: false }) = doc.perturbation {
        return Err(CliError::Schema("perturbation {\"simple\": false} names no family".into()));
    }
    if let Some([lo, hi]) = doc.interval {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CliError::Schema(format!("interval [{lo}, {hi}] must satisfy lo < hi")));
        }
    }
    if let Some(t) = &doc.tolerances {
        positive("tolerances.atol", t.atol)?;
        positive("tolerances.rtol", t.rtol)?;
        positive("tolerances.settle", t.settle)?;
    }
    if let Some(p) = &doc.parameters {
        positive("parameters.t_end", p.t_end)?;
        for (name, v) in [("parameters.mu", p.mu), ("parameters.eps", p.eps)] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(CliError::Schema(format!("{name} must be finite")));
            }
        }
    }
    if let Some(t) = doc.lift.as_ref().and_then(|l| l.l1_target.as_deref()) {
        if parse_rational(t).is_none() {
            return Err(CliError::Schema(format!("lift.l1_target {t:?} is not a rational number")));
        }
    }
    if let Some(b) = &doc.ball {
        positive("ball.radius", Some(b.radius))?;
    }
    Ok(LoadedInput {
        doc,
        sha256: hex_sha256(bytes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_perturbation_shapes_parse() {
        let a = br#"{"system":{"P":"0","Q":"y*z","R":"z^2"},"perturbation":{"simple":true}}"#;
        let b = br#"{"system":{"P":"0","Q":"y*z","R":"z^2"},"perturbation":{"U":"0","V":"0","W":"mu*z"}}"#;
        assert!(matches!(parse_input(a).unwrap().doc.perturbation, Some(PerturbationDoc::Simple { simple: true })));
        assert!(matches!(parse_input(b).unwrap().doc.perturbation, Some(PerturbationDoc::Explicit { .. })));
    }

    #[test]
    fn schema_violations() {
        for bad in [
            &br#"{"system":{"P":"0","Q":"0"}}"#[..],
            br#"{"system":{"P":"0","Q":"0","R":"0"},"extra":1}"#,
            br#"{"system":{"P":"0","Q":"0","R":"0"},"interval":[1,0]}"#,
            br#"{"system":{"P":"0","Q":"0","R":"0"},"tolerances":{"rtol":0}}"#,
            br#"{"system":{"P":"0","Q":"0","R":"0"},"perturbation":{"simple":false}}"#,
        ] {
            assert!(matches!(parse_input(bad), Err(CliError::Schema(_))), "{}", String::from_utf8_lossy(bad));
        }
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(hex_sha256(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
