//! Common scoring envelope shared by every detector.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DriftError, Result};

/// Detector identifiers as they appear in result files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Global model fit scored by the k-local MSE.
    Gm,
    /// Global model fit scored by residual k-NN structure.
    GmKnn,
    Mmd,
    Kfrd,
    Kcpd,
    Adf,
    Kpss,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gm,
        Method::GmKnn,
        Method::Mmd,
        Method::Kfrd,
        Method::Kcpd,
        Method::Adf,
        Method::Kpss,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gm => "gm",
            Method::GmKnn => "gm_knn",
            Method::Mmd => "mmd",
            Method::Kfrd => "kfrd",
            Method::Kcpd => "kcpd",
            Method::Adf => "adf",
            Method::Kpss => "kpss",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            // both spellings of the kernel Fisher ratio are in circulation
            .or((s == "kfdr").then_some(Method::Kfrd))
            .ok_or_else(|| DriftError::UnknownKind {
                what: "detector",
                value: s.into(),
            })
    }
}

/// Scalar drift indicator; higher means more evidence of drift.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorScore {
    pub value: f64,
    pub method: Method,
    /// Parameter snapshot as `key=value` pairs joined by `;`.
    pub params: String,
    /// Present for test-based detectors.
    pub p_value: Option<f64>,
}

impl DetectorScore {
    pub fn new(method: Method, value: f64, params: impl Into<String>) -> Self {
        Self {
            value,
            method,
            params: params.into(),
            p_value: None,
        }
    }

    pub fn with_p_value(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn params_hash(&self) -> String {
        short_hash(self.params.as_bytes())
    }
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `run_id,method,params_hash,score` rows.
pub fn write_scores_csv<W: Write>(out: W, rows: &[(u64, DetectorScore)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run_id", "method", "params_hash", "score"])?;
    for (run, s) in rows {
        w.write_record([
            run.to_string(),
            s.method.to_string(),
            s.params_hash(),
            s.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("kfdr".parse::<Method>().unwrap(), Method::Kfrd);
        assert!("lstm".parse::<Method>().is_err());
    }

    #[test]
    fn hash_is_stable() {
        // sha256("abc") = ba7816bf8f01cfea...
        assert_eq!(short_hash(b"abc"), "ba7816bf8f01cfea");
    }

    #[test]
    fn score_rows() {
        let s = DetectorScore::new(Method::Gm, 0.5, "k=3");
        let mut buf = Vec::new();
        write_scores_csv(&mut buf, &[(4, s.clone())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!("run_id,method,params_hash,score\n4,gm,{},0.5\n", s.params_hash())
        );
    }
}
