//! Analysis reports and their JSON / text rendering.

use ddsys_core::ToleranceConfig;
use serde::{Deserialize, Serialize};

use crate::io::SystemJson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank_rtol: f64,
    pub membership_rtol: f64,
    pub stability_margin: f64,
    pub match_atol: f64,
}

impl From<&ToleranceConfig> for Tolerances {
    fn from(t: &ToleranceConfig) -> Self {
        Self {
            rank_rtol: t.rank_rtol,
            membership_rtol: t.membership_rtol,
            stability_margin: t.stability_margin,
            match_atol: t.match_atol,
        }
    }
}

impl From<Tolerances> for ToleranceConfig {
    fn from(t: Tolerances) -> Self {
        Self {
            rank_rtol: t.rank_rtol,
            membership_rtol: t.membership_rtol,
            stability_margin: t.stability_margin,
            match_atol: t.match_atol,
        }
    }
}

/// One hypothesis of a decision procedure and whether the data meet it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
}

impl Condition {
    pub fn new(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
        }
    }
}

/// Relative degree obtained under persistency of excitation; `r = null`
/// means no nonzero Markov parameter was found (infinite relative degree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PePath {
    pub window: usize,
    pub r: Option<usize>,
    pub sharp: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecPePath {
    pub window: usize,
    /// `null` when the decoupling matrix lacks full row rank.
    pub r: Option<Vec<usize>>,
    pub g: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCount {
    pub suite: String,
    pub passed: usize,
    pub total: usize,
    /// Verdicts that contradict the oracle on data outside the hypotheses of the test.
    pub unsound: usize,
    /// Informative verdicts on data outside the hypotheses, all compared with the oracle.
    pub degraded_checked: usize,
}

impl SuiteCount {
    pub fn ok(&self) -> bool {
        self.passed == self.total && self.unsound == 0
    }
}

/// Command-specific result. Matrices are row-major nested arrays, complex
/// numbers `[re, im]` pairs and channel pairs 1-based `[output, input]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Verdict {
    Reldeg {
        informative: bool,
        r: Option<usize>,
        witness: Option<f64>,
        pe_path: Option<PePath>,
    },
    Vecreldeg {
        /// `full`, `decoupling_only` or `not_informative`.
        kind: String,
        r: Vec<Option<usize>>,
        g: Vec<Vec<f64>>,
        identified: Vec<Vec<bool>>,
        unidentified: Vec<[usize; 2]>,
        pe_path: Option<VecPePath>,
    },
    Zerodyn {
        /// `1` stable, `-1` unstable, `0` inconclusive.
        s: i8,
        q_tilde: Option<Vec<Vec<f64>>>,
        spectrum: Option<Vec<[f64; 2]>>,
        /// Stability from the persistency-of-excitation path, when requested.
        pe_stability: Option<String>,
    },
    Reconstruct {
        system: SystemJson,
        eigenvalues: Vec<[f64; 2]>,
        sampling_times: [f64; 3],
        k_max: usize,
    },
    CheckPe {
        pe: bool,
        window: usize,
    },
    Simulate {
        sequences: usize,
        samples: usize,
        output: Option<String>,
    },
    Verify {
        suites: Vec<SuiteCount>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub command: String,
    pub verdict: Verdict,
    pub tolerances_used: Tolerances,
    pub conditions: Vec<Condition>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn new(command: &str, verdict: Verdict, tol: &ToleranceConfig) -> Self {
        Self {
            command: command.into(),
            verdict,
            tolerances_used: tol.into(),
            conditions: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is finite")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(&self.verdict) {
            for (k, v) in map {
                if k != "type" {
                    out.push_str(&format!("  {k}: {v}\n"));
                }
            }
        }
        for c in &self.conditions {
            out.push_str(&format!(
                "  [{}] {}\n",
                if c.passed { "pass" } else { "fail" },
                c.name
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
        out
    }
}
