//! Frozen regression anchors: quantities with no closed form, recorded with
//! the hash of the configuration that produced them.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::check::CheckReport;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::operator::{berezin_symbol, semi_commutator, toeplitz_radial_diag, truncation_convergence, CoefficientVector};
use crate::quadrature::QuadratureConfig;
use crate::symbols::{example45, rand_smooth};

pub const SCHEMA: &str = "bergman-osc/1";

/// Largest absolute change accepted between the base and the refined run.
pub const ANCHOR_STABILITY: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub quantity: String,
    pub config_hash: String,
    pub value: f64,
    /// `YYYY-MM-DD` of the run that last changed the value.
    pub date: String,
    /// How the value was verified.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTable {
    pub schema: String,
    pub anchors: Vec<AnchorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorDiff {
    pub quantity: String,
    pub old: Option<f64>,
    pub new: f64,
}

/// Hex SHA-256 of the JSON form of the configuration.
pub fn config_hash(cfg: &QuadratureConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tolerances below this hit the rounding floor of the kernel integrals.
const FINEST_TOLERANCE: f64 = 1e-11;

/// Tighter tolerance and more nodes, for the self-convergence comparison.
pub fn refined(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig {
        tolerance: (cfg.tolerance * 0.01).max(FINEST_TOLERANCE).min(cfg.tolerance),
        nodes: (cfg.nodes + 4).min(crate::quadrature::MAX_NODES / 2),
        ..*cfg
    }
}

/// Civil date of a Unix day number.
fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

pub fn today() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (y, m, d) = civil_from_days((secs / 86_400) as i64);
    format!("{y:04}-{m:02}-{d:02}")
}

type AnchorFn = fn(&QuadratureConfig) -> Result<f64>;

fn truncation_tail(cfg: &QuadratureConfig) -> Result<f64> {
    let f = example45(1.5, 1.0)?;
    let e0 = CoefficientVector::basis(1, 0)?;
    let rep = truncation_convergence(&f, &e0, &[0.9, 0.99, 0.999], 16, cfg)?;
    Ok(rep.residuals[rep.residuals.len() - 1])
}

fn diagonal_100(cfg: &QuadratureConfig) -> Result<f64> {
    Ok(toeplitz_radial_diag(&example45(1.0, 1.0)?, 101, cfg)?[100].re)
}

fn berezin_at_09(cfg: &QuadratureConfig) -> Result<f64> {
    Ok(berezin_symbol(&example45(1.0, 1.0)?, Point::polar(0.9, 0.0), cfg)?.re)
}

fn semi_commutator_norm(cfg: &QuadratureConfig) -> Result<f64> {
    Ok(semi_commutator(&rand_smooth(1), &rand_smooth(2), 64, cfg)?.hankel)
}

const ANCHORS: &[(&str, AnchorFn)] = &[
    ("truncation_residual[example45(b=1.5,beta=1), e0, outside 0.999]", truncation_tail),
    ("toeplitz_diagonal[example45(b=1,beta=1), n=100]", diagonal_100),
    ("berezin[example45(b=1,beta=1), z=0.9]", berezin_at_09),
    ("hankel_route_norm[rand(1), rand(2), e0, N=64]", semi_commutator_norm),
];

/// Every anchor at `cfg`, each confirmed against the [`refined`] config.
pub fn compute_anchors(cfg: &QuadratureConfig) -> Result<Vec<AnchorRecord>> {
    let fine = refined(cfg);
    let hash = config_hash(cfg);
    let date = today();
    ANCHORS
        .iter()
        .map(|(name, f)| {
            let (a, b) = (f(cfg)?, f(&fine)?);
            if (a - b).abs() > ANCHOR_STABILITY {
                return Err(Error::ToleranceNotReached {
                    value: a,
                    error: (a - b).abs(),
                });
            }
            Ok(AnchorRecord {
                quantity: name.to_string(),
                config_hash: hash.clone(),
                value: a,
                date: date.clone(),
                source: format!("self-converged, refined run differs by {:.1e}", (a - b).abs()),
            })
        })
        .collect()
}

pub fn read_table(path: &Path) -> Result<Option<AnchorTable>> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(serde_json::from_str(&s)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Merge fresh records into an old table: unchanged values keep their old
/// record (and date). Returns the table and the changed entries.
pub fn merge(old: Option<&AnchorTable>, fresh: Vec<AnchorRecord>) -> (AnchorTable, Vec<AnchorDiff>) {
    let mut diffs = Vec::new();
    let anchors = fresh
        .into_iter()
        .map(|rec| {
            let prev = old.and_then(|t| t.anchors.iter().find(|a| a.quantity == rec.quantity));
            match prev {
                Some(p) if p.value.to_bits() == rec.value.to_bits() && p.config_hash == rec.config_hash => p.clone(),
                _ => {
                    diffs.push(AnchorDiff {
                        quantity: rec.quantity.clone(),
                        old: prev.map(|p| p.value),
                        new: rec.value,
                    });
                    rec
                }
            }
        })
        .collect();
    (
        AnchorTable {
            schema: SCHEMA.to_string(),
            anchors,
        },
        diffs,
    )
}

/// Recompute the anchors and rewrite the table at `path`; refuses unless
/// `checks` passed.
pub fn regenerate_anchor_table(path: &Path, checks: &CheckReport, cfg: &QuadratureConfig) -> Result<Vec<AnchorDiff>> {
    if !checks.passed() {
        return Err(Error::RefusesIfChecksRed(checks.failures().join(", ")));
    }
    let old = read_table(path)?;
    let (table, diffs) = merge(old.as_ref(), compute_anchors(cfg)?);
    let mut text = serde_json::to_string_pretty(&table)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(diffs)
}

/// Write through a sibling temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{CheckOptions, CheckOutcome};

    #[test]
    fn civil_dates() {
        assert_eq!(civil_from_days(0), (1970, 1, 1));
        assert_eq!(civil_from_days(19_723), (2024, 1, 1));
        assert_eq!(civil_from_days(11_016), (2000, 2, 29));
    }

    #[test]
    fn hash_tracks_config() {
        let a = QuadratureConfig::default();
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&refined(&a)));
        assert_eq!(config_hash(&a).len(), 64);
    }

    fn rec(q: &str, v: f64, date: &str) -> AnchorRecord {
        AnchorRecord {
            quantity: q.into(),
            config_hash: "h".into(),
            value: v,
            date: date.into(),
            source: "s".into(),
        }
    }

    #[test]
    fn unchanged_values_give_empty_diff() {
        let (t, d) = merge(None, vec![rec("a", 1.0, "2020-01-01")]);
        assert_eq!(d.len(), 1);
        let (t2, d2) = merge(Some(&t), vec![rec("a", 1.0, "2030-01-01")]);
        assert!(d2.is_empty());
        assert_eq!(t2.anchors[0].date, "2020-01-01");
        let (_, d3) = merge(Some(&t2), vec![rec("a", 1.5, "2030-01-01")]);
        assert_eq!(d3[0].old, Some(1.0));
    }

    #[test]
    fn refuses_when_red() {
        let red = CheckReport {
            options: CheckOptions::default(),
            outcomes: vec![CheckOutcome {
                name: "x".into(),
                passed: false,
                detail: String::new(),
                seconds: 0.0,
            }],
        };
        let path = std::env::temp_dir().join("bergman-osc-refuse.json");
        assert!(matches!(
            regenerate_anchor_table(&path, &red, &QuadratureConfig::default()),
            Err(Error::RefusesIfChecksRed(_))
        ));
        assert!(!path.exists());
    }
}
