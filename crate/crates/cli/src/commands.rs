use bdmap::analysis::DimensionMethod;
use bdmap::flow::{certify_constants, FlowConstants};
use bdmap::map::CookieMap;
use bdmap::symbolic::enumerate_intervals;
use bdmap::{Analyzer, Error, Exec};
use serde::Serialize;

use crate::args::Command;
use crate::report::{num, Report};

/// Certification grid used ahead of every analysis.
const ANALYSIS_CERT_GRID: usize = 4096;

#[derive(Debug)]
pub enum Failure {
    Analysis(Error),
    Output(Box<dyn std::error::Error>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Output(Box::new(e))
    }
}

type Outcome = Result<Report, Failure>;

#[derive(Serialize)]
struct Certified {
    #[serde(flatten)]
    constants: FlowConstants,
    #[serde(rename = "C_theory")]
    c_theory: f64,
    ok: bool,
}

fn analyzer(tol: f64, exec: Exec) -> Result<Analyzer, Error> {
    let constants = certify_constants(ANALYSIS_CERT_GRID, tol)?;
    Ok(Analyzer::new(CookieMap::new(constants)).with_exec(exec))
}

pub fn run(command: &Command, tol: f64, exec: Exec) -> Outcome {
    match *command {
        Command::Certify { grid } => certify(grid as usize, tol),
        Command::VerifyLemmas { depth } => verify_lemmas(&analyzer(tol, exec)?, depth as usize),
        Command::Distortion { depth, grid } => distortion(&analyzer(tol, exec)?, depth as usize, grid as usize),
        Command::Sbd { k } => sbd(&analyzer(tol, exec)?, k),
        Command::SbdProfile {
            depth,
            grid,
            ref scales,
        } => sbd_profile(&analyzer(tol, exec)?, depth as usize, grid as usize, scales),
        Command::Dimension { depth, method } => dimension(&analyzer(tol, exec)?, depth as usize, method.into()),
        Command::Intervals { depth } => intervals(&analyzer(tol, exec)?, depth as usize),
    }
}

fn certify(grid: usize, tol: f64) -> Outcome {
    let constants = certify_constants(grid, tol)?;
    let doc = Certified {
        constants,
        c_theory: constants.distortion_bound(),
        ok: true,
    };
    let mut report = Report::new(&doc, vec!["T", "M", "B1", "C_theory", "ok"])?;
    report.row([
        num(constants.t_bound),
        num(constants.m_bound),
        num(constants.b1),
        num(doc.c_theory),
        "true".into(),
    ]);
    Ok(report)
}

fn verify_lemmas(a: &Analyzer, depth: usize) -> Outcome {
    let table = a.verify_lemmas(depth)?;
    let mut report = Report::new(&table, vec!["lemma", "check", "value", "threshold", "pass"])?;
    for r in &table.rows {
        report.row([
            r.lemma.clone(),
            r.check.clone(),
            num(r.value),
            num(r.threshold),
            r.pass.to_string(),
        ]);
    }
    report.passed = table.passed();
    Ok(report)
}

#[derive(Serialize)]
struct DistortionRow {
    k: usize,
    #[serde(rename = "C_k")]
    c_k: f64,
    argmax: String,
}

#[derive(Serialize)]
struct DistortionDoc {
    grid: usize,
    #[serde(rename = "C_theory")]
    c_theory: f64,
    rows: Vec<DistortionRow>,
}

fn distortion(a: &Analyzer, depth: usize, grid: usize) -> Outcome {
    let reports = a.bd_sweep(depth, grid)?;
    let doc = DistortionDoc {
        grid,
        c_theory: a.map().constants().distortion_bound(),
        rows: reports
            .iter()
            .map(|r| DistortionRow {
                k: r.depth,
                c_k: r.c_k,
                argmax: r.argmax.to_string(),
            })
            .collect(),
    };
    let mut report = Report::new(&doc, vec!["k", "C_k", "C_theory"])?;
    for r in &reports {
        report.row([r.depth.to_string(), num(r.c_k), num(r.c_theory)]);
    }
    Ok(report)
}

fn sbd(a: &Analyzer, k: u32) -> Outcome {
    let w = a.sbd_witness(k)?;
    let mut report = Report::new(&w, vec!["k", "ratio", "limit_ratio", "image_log_size"])?;
    report.row([w.k.to_string(), num(w.ratio), num(w.limit_ratio), num(w.image_log_size)]);
    Ok(report)
}

#[derive(Serialize)]
struct ProfileDoc<'a> {
    depth: usize,
    grid: usize,
    profile: &'a [bdmap::analysis::SbdProfile],
}

fn sbd_profile(a: &Analyzer, depth: usize, grid: usize, scales: &[f64]) -> Outcome {
    let profile = a.sbd_profile(depth, scales, grid)?;
    let doc = ProfileDoc {
        depth,
        grid,
        profile: &profile,
    };
    let mut report = Report::new(&doc, vec!["r", "beta_hat", "source"])?;
    for p in &profile {
        report.row([num(p.r), num(p.beta_hat), p.source.clone()]);
    }
    Ok(report)
}

fn dimension(a: &Analyzer, depth: usize, method: DimensionMethod) -> Outcome {
    let e = a.dimension_estimate(depth, method)?;
    let mut report = Report::new(&e, vec!["depth", "method", "s", "s_lower", "s_upper"])?;
    report.row([
        e.depth.to_string(),
        e.method.to_string(),
        num(e.s),
        num(e.s_lower),
        num(e.s_upper),
    ]);
    Ok(report)
}

#[derive(Serialize)]
struct IntervalRow {
    word: String,
    left: f64,
    right: f64,
    log_size: f64,
}

fn intervals(a: &Analyzer, depth: usize) -> Outcome {
    let list = enumerate_intervals(a.map(), depth, a.exec())?;
    let rows: Vec<IntervalRow> = list
        .iter()
        .map(|i| IntervalRow {
            word: i.word.to_string(),
            left: i.left.raw(),
            right: i.right.raw(),
            log_size: i.log_size,
        })
        .collect();
    let mut report = Report::new(&rows, vec!["word", "left", "right", "log_size"])?;
    for r in &rows {
        report.row([r.word.clone(), num(r.left), num(r.right), num(r.log_size)]);
    }
    Ok(report)
}
