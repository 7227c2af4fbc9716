use std::path::PathBuf;

use bdmap::analysis::{DimensionMethod, DIMENSION_DEPTH_CAP, DISTORTION_DEPTH_CAP, MIN_GRID, PROFILE_DEPTH_CAP};
use bdmap::symbolic::DEPTH_CAP;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bdmap",
    version,
    about = "Distortion and dimension analyses of a flow-conjugated Cantor map"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Integrator tolerance, in [1e-14, 1e-6]
    #[arg(long, default_value = "1e-13", value_parser = parse_tol, global = true)]
    pub tol: f64,

    /// Worker threads for the sweeps (default: all cores)
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..), global = true)]
    pub threads: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bowen,
    Box,
}

impl From<Method> for DimensionMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Bowen => DimensionMethod::Bowen,
            Method::Box => DimensionMethod::Box,
        }
    }
}

/// Grid for certifying the flow constants.
const CERT_GRID: u64 = 4096;
const MIN_CERT_GRID: u64 = 1024;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify T, M and B1 for the flow family
    Certify {
        #[arg(long, default_value_t = CERT_GRID, value_parser = clap::value_parser!(u64).range(MIN_CERT_GRID..))]
        grid: u64,
    },
    /// Check the C1 junctions, the interval and derivative identities and the size bound
    VerifyLemmas {
        #[arg(long, default_value_t = 12, value_parser = depth_parser(DEPTH_CAP))]
        depth: u64,
    },
    /// Largest distortion C_k of F^k per depth
    Distortion {
        #[arg(long, default_value_t = 10, value_parser = depth_parser(DISTORTION_DEPTH_CAP))]
        depth: u64,
        #[arg(long, default_value_t = 257, value_parser = grid_parser())]
        grid: u64,
    },
    /// Distortion of F^(2^k) on J_(2^(k+1)-1)
    Sbd {
        #[arg(long, default_value_t = 2, value_parser = parse_witness_k)]
        k: u32,
    },
    /// Largest distortion over pairs with image diameter at most 1/r
    SbdProfile {
        #[arg(long, default_value_t = 10, value_parser = depth_parser(PROFILE_DEPTH_CAP))]
        depth: u64,
        #[arg(long, default_value_t = 257, value_parser = grid_parser())]
        grid: u64,
        /// Comma-separated scales r ≥ 1
        #[arg(long, value_delimiter = ',', default_value = "1,3,9,27,81,243,729", value_parser = parse_scale)]
        scales: Vec<f64>,
    },
    /// Dimension of the repeller with the certified bracket
    Dimension {
        #[arg(long, default_value_t = 14, value_parser = depth_parser(DIMENSION_DEPTH_CAP))]
        depth: u64,
        #[arg(long, value_enum, default_value_t = Method::Bowen)]
        method: Method,
    },
    /// Endpoints of the depth-k basic intervals, left to right
    Intervals {
        #[arg(long, default_value_t = 4, value_parser = depth_parser(DEPTH_CAP))]
        depth: u64,
    },
}

fn depth_parser(cap: usize) -> clap::builder::RangedU64ValueParser {
    clap::value_parser!(u64).range(1..=cap as u64)
}

fn grid_parser() -> clap::builder::RangedU64ValueParser {
    clap::value_parser!(u64).range(MIN_GRID as u64..=1 << 16)
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let tol: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (1e-14..=1e-6).contains(&tol) {
        Ok(tol)
    } else {
        Err(format!("{tol} is outside [1e-14, 1e-6]"))
    }
}

fn parse_witness_k(s: &str) -> Result<u32, String> {
    let k: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if k.is_multiple_of(2) && (2..=6).contains(&k) {
        Ok(k)
    } else {
        Err("k must be one of 2, 4, 6".into())
    }
}

fn parse_scale(s: &str) -> Result<f64, String> {
    let r: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if r >= 1.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(format!("scale {r} must be a finite number ≥ 1"))
    }
}
