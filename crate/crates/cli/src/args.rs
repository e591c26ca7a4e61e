use std::fmt;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "clusterbell", version, about = "Nonlocality of graph and cluster states")]
pub struct Cli {
    /// Emit the report as JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,

    /// Seed for optimizer restarts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every stabilizer element of a graph state with its sign.
    Group {
        /// `1d:N`, `AxB[xC]`, `star:K`, or a graph file.
        #[arg(long)]
        graph: String,
    },
    /// Search the stabilizer group for GHZ arguments.
    Paradox {
        #[arg(long)]
        graph: String,

        /// Largest subset size to consider.
        #[arg(long, default_value_t = 4)]
        max_size: usize,

        /// Only use elements supported on these sites (comma separated).
        #[arg(long, value_delimiter = ',')]
        sites: Option<Vec<usize>>,
    },
    /// Classical, quantum and algebraic values of a Bell inequality.
    Bounds {
        #[arg(long)]
        ineq: Inequality,

        /// `cluster`, `ghz`, `w4` or `reduced-window(N,k)`.
        #[arg(long, default_value = "cluster")]
        state: StateSpec,

        /// Graph for the cluster state and the stabilizer sum; defaults to a chain
        /// with one site per party.
        #[arg(long)]
        graph: Option<String>,

        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Re-run every reproduction check and print a pass/fail table.
    ReportPaper {
        /// Rotate the first qubit of every cluster state slightly; the
        /// eigenvalue checks must then fail.
        #[arg(long)]
        debug_perturb: bool,

        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Inequality {
    Cluster4,
    Window5,
    Mabk4,
    Stabsum,
}

impl Inequality {
    pub fn name(self) -> &'static str {
        match self {
            Inequality::Cluster4 => "cluster4",
            Inequality::Window5 => "window5",
            Inequality::Mabk4 => "mabk4",
            Inequality::Stabsum => "stabsum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpec {
    Cluster,
    Ghz,
    W4,
    ReducedWindow { n: usize, k: usize },
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cluster" => return Ok(StateSpec::Cluster),
            "ghz" => return Ok(StateSpec::Ghz),
            "w4" => return Ok(StateSpec::W4),
            _ => {}
        }
        let inner = s
            .strip_prefix("reduced-window(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("unknown state `{s}`; expected cluster, ghz, w4 or reduced-window(N,k)"))?;
        let (n, k) = inner
            .split_once(',')
            .ok_or_else(|| format!("expected reduced-window(N,k), got `{s}`"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{v}` is not a non-negative integer"))
        };
        Ok(StateSpec::ReducedWindow {
            n: parse(n)?,
            k: parse(k)?,
        })
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Cluster => f.write_str("cluster"),
            StateSpec::Ghz => f.write_str("ghz"),
            StateSpec::W4 => f.write_str("w4"),
            StateSpec::ReducedWindow { n, k } => write!(f, "reduced-window({n},{k})"),
        }
    }
}
