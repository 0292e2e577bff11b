mod config;
mod output;

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::Parser;
use num_complex::Complex64;
use serde::Serialize;

use bergman_osc::anchors::regenerate_anchor_table;
use bergman_osc::check::{run_checks, CheckOptions};
use bergman_osc::operator::toeplitz_matrix;
use bergman_osc::profile::RadialProfile;
use bergman_osc::spectra::{fredholm_index, IndexReport, SpectrumReport};
use bergman_osc::study::{example45_study, functional_profile, verdict, Example45Row, ProfileSettings, Verdict};
use bergman_osc::Error;

use config::{resolve, Cli, RunConfig};
use output::Outputs;

/// Failure after the configuration was accepted.
enum Failure {
    Checks,
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rc = match resolve(cli) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if rc.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(rc.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match rc.command.as_str() {
        "profile" => cmd_profile(&rc),
        "spectrum" => cmd_spectrum(&rc),
        "index" => cmd_index(&rc),
        "example45" => cmd_example45(&rc),
        "check" => cmd_check(&rc),
        "anchors" => cmd_anchors(&rc),
        other => unreachable!("unknown command {other}"),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn report_written(out: &Outputs) {
    for p in &out.written {
        eprintln!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct ProfileResult<'a> {
    profile: &'a RadialProfile,
    verdict: &'a Verdict,
}

fn cmd_profile(rc: &RunConfig) -> std::result::Result<(), Failure> {
    let f = rc.symbol()?;
    let functional = rc.functional.expect("resolved");
    let settings = ProfileSettings {
        radii: rc.radii.clone(),
        angles: rc.angles,
        grid: (rc.grid.expect("resolved"), rc.grid.expect("resolved")),
    };
    let profile = functional_profile(&f, functional, &settings, &rc.quadrature)?;
    let v = verdict(functional, &profile);
    let mut out = Outputs::new(rc);
    out.csv(".csv", &profile.to_csv())?;
    out.json(".json", &ProfileResult { profile: &profile, verdict: &v })?;
    for (r, x) in profile.radii.iter().zip(&profile.values) {
        println!("r = {r:.6}  {x:.6e}");
    }
    println!("{}", v.line);
    report_written(&out);
    Ok(())
}

fn complex_csv(header: &str, rows: impl Iterator<Item = (String, Complex64)>) -> String {
    let mut s = format!("{header}\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{:.17e},{:.17e}", v.re, v.im);
    }
    s
}

fn cmd_spectrum(rc: &RunConfig) -> std::result::Result<(), Failure> {
    let f = rc.symbol()?;
    let n = rc.n.expect("resolved");
    let section = toeplitz_matrix(&f, n, &rc.quadrature)?;
    let mut report = SpectrumReport::build(&section, &f, &rc.radii, rc.angles, &rc.quadrature)?;
    report.eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out = Outputs::new(rc);
    out.csv(
        ".eigenvalues.csv",
        &complex_csv("k,re,im", report.eigenvalues.iter().enumerate().map(|(k, v)| (k.to_string(), *v))),
    )?;
    out.csv(
        ".cluster.csv",
        &complex_csv(
            "r,theta,re,im",
            report.cluster.points.iter().map(|(r, t, v)| (format!("{r:.17e},{t:.17e}"), *v)),
        ),
    )?;
    if f.is_radial() {
        out.csv(
            ".diagonal.csv",
            &complex_csv("n,re,im", section.diagonal().into_iter().enumerate().map(|(k, v)| (k.to_string(), v))),
        )?;
    }
    out.json(".json", &report)?;
    let spectral_radius = report.eigenvalues.iter().map(|v| v.norm()).fold(0.0, f64::max);
    println!("N = {n}: {} eigenvalues, spectral radius {spectral_radius:.6}", report.eigenvalues.len());
    for (r, m) in report.cluster.radii.iter().zip(&report.cluster.max_modulus) {
        println!("cluster r = {r:.6}: max |f^| {m:.6e}");
    }
    println!("essential norm estimate {:.6e}", report.essential_norm);
    report_written(&out);
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
enum IndexOutcome {
    Fredholm { report: IndexReport },
    NotFredholm { reason: String },
    Unstable { indices: Vec<i64> },
}

fn cmd_index(rc: &RunConfig) -> std::result::Result<(), Failure> {
    let f = rc.symbol()?;
    let which = rc.transform.expect("resolved");
    let outcome = match fredholm_index(&f, &rc.radii, rc.angles, which, &rc.quadrature) {
        Ok(report) => IndexOutcome::Fredholm { report },
        Err(Error::NotFredholm(reason)) => IndexOutcome::NotFredholm { reason },
        Err(Error::Unstable(indices)) => IndexOutcome::Unstable { indices },
        Err(e) => return Err(e.into()),
    };
    let mut out = Outputs::new(rc);
    if let IndexOutcome::Fredholm { report } = &outcome {
        let mut s = String::from("r,winding,min_modulus,samples\n");
        for i in 0..report.radii.len() {
            let _ = writeln!(s, "{:.17e},{},{:.17e},{}", report.radii[i], report.indices[i], report.min_modulus[i], report.samples[i]);
        }
        out.csv(".csv", &s)?;
    }
    out.json(".json", &outcome)?;
    match &outcome {
        IndexOutcome::Fredholm { report } => {
            println!("index {} (stable across {} radii)", report.index, report.radii.len())
        }
        IndexOutcome::NotFredholm { reason } => println!("NotFredholm: {reason}"),
        IndexOutcome::Unstable { indices } => println!("Unstable: windings {indices:?}"),
    }
    report_written(&out);
    Ok(())
}

fn slope_cell(p: &std::result::Result<RadialProfile, String>) -> String {
    match p {
        Ok(p) => p.slope().map(|s| format!("{s:.4}")).unwrap_or_default(),
        Err(_) => String::new(),
    }
}

fn cmd_example45(rc: &RunConfig) -> std::result::Result<(), Failure> {
    let g = rc.grid.expect("resolved");
    let settings = ProfileSettings {
        radii: rc.radii.clone(),
        angles: rc.angles,
        grid: (g, g),
    };
    let rows: Vec<Example45Row> = example45_study(&settings, &rc.quadrature)?;
    let mut table = String::from("b,beta,vwmo_slope,bmo1_slope,fhat_slope,l1,diagonal_decay,summary\n");
    let mut profiles = String::from("b,beta,functional,r,value\n");
    for row in &rows {
        let decay = row.diagonal_decay.as_ref().map(|d| format!("{d:.6e}")).unwrap_or_default();
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},\"{}\"",
            row.b,
            row.beta,
            slope_cell(&row.vwmo),
            slope_cell(&row.bmo1),
            slope_cell(&row.fhat),
            row.integrable,
            decay,
            row.summary
        );
        for (name, p) in [("vwmo", &row.vwmo), ("bmo1", &row.bmo1), ("fhat", &row.fhat)] {
            if let Ok(p) = p {
                for (r, v) in p.radii.iter().zip(&p.values) {
                    let _ = writeln!(profiles, "{},{},{name},{r:.17e},{v:.17e}", row.b, row.beta);
                }
            }
        }
    }
    let mut out = Outputs::new(rc);
    out.csv(".csv", &table)?;
    out.csv(".profiles.csv", &profiles)?;
    out.json(".json", &rows)?;
    println!("{:>5} {:>5} {:>10} {:>10} {:>10} {:>6} {:>12}  summary", "b", "beta", "vwmo", "bmo1", "fhat", "L1", "diag decay");
    for row in &rows {
        let decay = row.diagonal_decay.as_ref().map(|d| format!("{d:.3e}")).unwrap_or_else(|_| "-".into());
        println!(
            "{:>5} {:>5} {:>10} {:>10} {:>10} {:>6} {:>12}  {}",
            row.b,
            row.beta,
            slope_cell(&row.vwmo),
            slope_cell(&row.bmo1),
            slope_cell(&row.fhat),
            row.integrable,
            decay,
            row.summary
        );
    }
    report_written(&out);
    Ok(())
}

fn run_suite(rc: &RunConfig) -> bergman_osc::check::CheckReport {
    let report = run_checks(
        CheckOptions {
            fast: rc.fast,
            fault: rc.fault,
        },
        &rc.quadrature,
    );
    for o in &report.outcomes {
        println!("{} {} ({}, {:.2} s)", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail, o.seconds);
    }
    report
}

fn cmd_check(rc: &RunConfig) -> std::result::Result<(), Failure> {
    let report = run_suite(rc);
    let mut out = Outputs::new(rc);
    out.json(".json", &report)?;
    report_written(&out);
    if report.passed() {
        println!("all {} checks passed", report.outcomes.len());
        Ok(())
    } else {
        eprintln!("failed: {}", report.failures().join(", "));
        Err(Failure::Checks)
    }
}

fn cmd_anchors(rc: &RunConfig) -> std::result::Result<(), Failure> {
    let report = run_suite(rc);
    let table = rc.table.as_ref().expect("resolved");
    match regenerate_anchor_table(table, &report, &rc.quadrature) {
        Ok(diffs) => {
            if diffs.is_empty() {
                println!("anchors unchanged");
            }
            for d in diffs {
                match d.old {
                    Some(old) => println!("{}: {old:.17e} -> {:.17e} (change {:.2e})", d.quantity, d.new, d.new - old),
                    None => println!("{}: new {:.17e}", d.quantity, d.new),
                }
            }
            eprintln!("wrote {}", table.display());
            Ok(())
        }
        Err(e @ Error::RefusesIfChecksRed(_)) => {
            eprintln!("error: {e}");
            Err(Failure::Checks)
        }
        Err(e) => Err(e.into()),
    }
}
