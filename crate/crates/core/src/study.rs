//! Radial-profile studies shared by the command line and the check suite:
//! named functionals, their verdict lines, and the example45 parameter grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::toeplitz_radial_diag;
use crate::oscillation::{
    averaging_local, average_symbol, bmo_local, box_average, disc_average, envelope_profile, lattice_profile,
    oscillation_omega, vwmo_profile, Lattice,
};
use crate::profile::RadialProfile;
use crate::quadrature::QuadratureConfig;
use crate::symbols::{example45, Integrability, Symbol};
use crate::thresholds::{BOUNDED_SPREAD, DIAGONAL_DECAY, UNBOUNDED_GROWTH};

/// Radii per lattice cell for envelope profiles.
pub const ENVELOPE_SUB: usize = 8;

/// Section size for the diagonal decay column of the example45 study.
pub const DIAGONAL_SIZE: usize = 256;

/// Largest `((1 - r) / 2)^-b` (oscillation phase across a box) for which the
/// example45 study evaluates a radius.
pub const PHASE_BUDGET: f64 = 1e5;

/// The `(b, beta)` grid of the example45 study.
pub const EXAMPLE45_GRID: [(f64, f64); 3] = [(1.0, 1.0), (1.5, 1.0), (2.0, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    /// `bwmo_local` profile judged by its limit.
    Vwmo,
    /// `bwmo_local` profile judged by its size.
    Bwmo,
    Averaging,
    Bmo1,
    /// Envelope of `|f^|`.
    Fhat,
    /// Envelope of `|f^_1|` over `D(z, 1)`.
    Disc,
    /// `omega` of the box-average function.
    Omega,
}

impl Functional {
    pub const ALL: [Functional; 7] = [
        Functional::Vwmo,
        Functional::Bwmo,
        Functional::Averaging,
        Functional::Bmo1,
        Functional::Fhat,
        Functional::Disc,
        Functional::Omega,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Vwmo => "vwmo",
            Functional::Bwmo => "bwmo",
            Functional::Averaging => "averaging",
            Functional::Bmo1 => "bmo1",
            Functional::Fhat => "fhat",
            Functional::Disc => "disc",
            Functional::Omega => "omega",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Functional::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown functional {s:?}")))
    }
}

/// Lattice and grid used for a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSettings {
    pub radii: Vec<f64>,
    pub angles: usize,
    pub grid: (usize, usize),
}

/// Profile of `functional` over the lattice (one angle for radial symbols).
pub fn functional_profile(f: &Symbol, functional: Functional, settings: &ProfileSettings, cfg: &QuadratureConfig) -> Result<RadialProfile> {
    let lattice = Lattice::for_symbol(f, settings.radii.clone(), settings.angles)?;
    let label = format!("{functional}[{}]", f.name());
    match functional {
        Functional::Vwmo | Functional::Bwmo => vwmo_profile(f, &lattice, settings.grid, cfg),
        Functional::Averaging => lattice_profile(&label, &lattice, |z| Ok(averaging_local(f, z, settings.grid, cfg)?.value)),
        Functional::Bmo1 => lattice_profile(&label, &lattice, |z| bmo_local(f, z, 1.0, 1.0, cfg)),
        Functional::Fhat => envelope_profile(&label, &lattice, ENVELOPE_SUB, |z| Ok(box_average(f, z, cfg)?.norm())),
        Functional::Disc => envelope_profile(&label, &lattice, ENVELOPE_SUB, |z| Ok(disc_average(f, z, 1.0, cfg)?.norm())),
        Functional::Omega => {
            let fhat = average_symbol(f, cfg);
            lattice_profile(&label, &lattice, |z| Ok(oscillation_omega(&fhat, z, cfg)?.value))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub line: String,
}

fn slope_text(p: &RadialProfile) -> String {
    p.slope().map(|s| format!("slope {s:.2}")).unwrap_or_else(|| "no slope".into())
}

fn grows(p: &RadialProfile) -> bool {
    p.last() > UNBOUNDED_GROWTH * p.first().max(crate::thresholds::RATIO_FLOOR)
}

/// Verdict line for a profile. Limit-type functionals pass when the profile
/// vanishes (or is identically zero); size-type ones when it stays bounded.
pub fn verdict(functional: Functional, p: &RadialProfile) -> Verdict {
    let limit = |name: &str| {
        let pass = p.all_zero() || p.vanishes();
        let state = if p.all_zero() { "zero".to_string() } else { slope_text(p) };
        Verdict {
            pass,
            line: format!("{name}: {}, {state}", if pass { "PASS" } else { "FAIL" }),
        }
    };
    let size = |name: &str| {
        let pass = p.all_zero() || (!grows(p) && p.spread() < BOUNDED_SPREAD) || p.vanishes();
        let state = if p.all_zero() {
            "zero"
        } else if pass {
            "bounded"
        } else {
            "unbounded"
        };
        Verdict {
            pass,
            line: format!("{name}: {} ({state}), {}", if pass { "PASS" } else { "FAIL" }, slope_text(p)),
        }
    };
    match functional {
        Functional::Vwmo => limit("VWMO proxy"),
        Functional::Bwmo => size("BWMO proxy"),
        Functional::Averaging => limit("averaging condition"),
        Functional::Bmo1 => size("BMO1"),
        Functional::Fhat => limit("box average limit"),
        Functional::Disc => limit("disc average limit"),
        Functional::Omega => limit("VO of the average"),
    }
}

/// `sup_{n >= N/2} |d_n| / sup_n |d_n|` for the diagonal of a radial section.
pub fn diagonal_decay(f: &Symbol, n: usize, cfg: &QuadratureConfig) -> Result<f64> {
    let d = toeplitz_radial_diag(f, n, cfg)?;
    let all = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tail = d[n / 2..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(tail / all.max(crate::thresholds::RATIO_FLOOR))
}

/// One row of the example45 study. Entries that could not be computed carry
/// the error text instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example45Row {
    pub b: f64,
    pub beta: f64,
    pub bounded: bool,
    pub integrable: bool,
    pub vwmo: std::result::Result<RadialProfile, String>,
    pub bmo1: std::result::Result<RadialProfile, String>,
    pub fhat: std::result::Result<RadialProfile, String>,
    pub diagonal_decay: std::result::Result<f64, String>,
    pub summary: String,
}

impl Example45Row {
    pub fn vwmo_holds(&self) -> bool {
        self.vwmo.as_ref().is_ok_and(|p| p.vanishes())
    }

    pub fn bmo1_bounded(&self) -> Option<bool> {
        self.bmo1.as_ref().ok().map(|p| verdict(Functional::Bmo1, p).pass)
    }

    pub fn compact(&self) -> bool {
        self.diagonal_decay.as_ref().is_ok_and(|&d| d <= DIAGONAL_DECAY)
    }
}

/// Profiles and classification for one `(b, beta)`.
pub fn example45_row(b: f64, beta: f64, settings: &ProfileSettings, cfg: &QuadratureConfig) -> Result<Example45Row> {
    let f = example45(b, beta)?;
    let radii: Vec<f64> = settings.radii.iter().copied().filter(|&r| ((1.0 - r) / 2.0).powf(-b) <= PHASE_BUDGET).collect();
    if radii.is_empty() {
        return Err(Error::BadParameters(format!("no radius within the phase budget for b = {b}")));
    }
    let settings = &ProfileSettings { radii, ..settings.clone() };
    let run = |func| functional_profile(&f, func, settings, cfg).map_err(|e| e.to_string());
    let vwmo = run(Functional::Vwmo);
    let bmo1 = run(Functional::Bmo1);
    let fhat = run(Functional::Fhat);
    let bounded = f.is_bounded();
    let integrable = f.flags().integrability == Integrability::L1;
    let diagonal_decay = if integrable {
        diagonal_decay(&f, DIAGONAL_SIZE, cfg).map_err(|e| e.to_string())
    } else {
        Err("symbol is not integrable".to_string())
    };
    let mut row = Example45Row {
        b,
        beta,
        bounded,
        integrable,
        vwmo,
        bmo1,
        fhat,
        diagonal_decay,
        summary: String::new(),
    };
    row.summary = summarize(&row);
    Ok(row)
}

fn summarize(row: &Example45Row) -> String {
    if !row.integrable {
        return "f in L1_loc only".into();
    }
    let vwmo = if row.vwmo_holds() { "VWMO yes" } else { "VWMO no" };
    match row.bmo1_bounded() {
        Some(true) if row.bounded => format!("{vwmo}, BMO1 bounded, type (ii)"),
        Some(true) => format!("{vwmo}, BMO1 bounded, f in L1"),
        Some(false) => format!("{vwmo}, BMO1 no, f in L1"),
        None => format!("{vwmo}, BMO1 not computed, f in L1"),
    }
}

/// Rows for [`EXAMPLE45_GRID`].
pub fn example45_study(settings: &ProfileSettings, cfg: &QuadratureConfig) -> Result<Vec<Example45Row>> {
    EXAMPLE45_GRID.iter().map(|&(b, beta)| example45_row(b, beta, settings, cfg)).collect()
}

/// Sup of `|f|` over a radial sample of `[0, r_max]` along the given angles.
pub fn sampled_sup(f: &Symbol, r_max: f64, radial: usize, angles: usize) -> f64 {
    let mut m = 0.0f64;
    for i in 0..=radial {
        let r = r_max * i as f64 / radial as f64;
        for k in 0..angles.max(1) {
            let t = std::f64::consts::TAU * k as f64 / angles.max(1) as f64;
            m = m.max(f.eval(r, t).norm());
        }
    }
    m
}
