use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pubshare_core::dist::SPEC_KINDS;
use pubshare_core::neural::{CostKind, Init};
use pubshare_core::{Objective, ValuationDistribution};

#[derive(Debug, Parser)]
#[command(name = "pubshare", version, about = "Cost-sharing mechanisms for binary public projects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of a mechanism's expected objective.
    Eval {
        #[command(flatten)]
        common: Common,
        /// scs, cec, seq, schedule:PATH, network:PATH or policy:PATH.
        #[arg(long, default_value = "scs")]
        mech: MechSpec,
        /// Offer used by `--mech seq`.
        #[arg(long, default_value_t = 1.0)]
        offer: f64,
    },
    /// Run a dynamic program.
    Solve {
        #[arg(value_enum)]
        solver: Solver,
        #[command(flatten)]
        common: Common,
        /// Where to write the shares, schedule or policy as JSON.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Upper bound on the objective of any largest unanimous mechanism.
    Bound {
        #[command(flatten)]
        common: Common,
    },
    /// Train a share network.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_init)]
        init: Option<Init>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, value_parser = parse_cost)]
        cost: Option<CostKind>,
        /// TrainConfig JSON; flags given on the command line override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the best network as JSON.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Recompute a published table next to its published values.
    Reproduce {
        #[arg(value_enum)]
        table: Table,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in consistency checks and print a pass/fail table.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_parser = parse_dist)]
    pub dist: Option<ValuationDistribution>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_objective)]
    pub objective: Option<Objective>,
    /// Grid density: money and offers move in steps of 1/H.
    #[arg(long = "H")]
    pub h: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Unanimous,
    OneDirectional,
    Myopic,
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    CecDpTwopeak,
    ScsVsBound,
    WelfareBaselines,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MechSpec {
    Scs,
    Cec,
    Seq,
    Schedule(PathBuf),
    Network(PathBuf),
    Policy(PathBuf),
}

impl FromStr for MechSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let path = |p: &str| {
            if p.is_empty() {
                Err(format!("`{s}` needs a path after the colon"))
            } else {
                Ok(PathBuf::from(p))
            }
        };
        match s.split_once(':') {
            None => match s {
                "scs" => Ok(MechSpec::Scs),
                "cec" => Ok(MechSpec::Cec),
                "seq" => Ok(MechSpec::Seq),
                _ => Err(format!("unknown mechanism `{s}`; valid: scs, cec, seq, schedule:PATH, network:PATH, policy:PATH")),
            },
            Some(("schedule", p)) => Ok(MechSpec::Schedule(path(p)?)),
            Some(("network", p)) => Ok(MechSpec::Network(path(p)?)),
            Some(("policy", p)) => Ok(MechSpec::Policy(path(p)?)),
            Some(_) => Err(format!("unknown mechanism `{s}`; valid: scs, cec, seq, schedule:PATH, network:PATH, policy:PATH")),
        }
    }
}

fn parse_dist(s: &str) -> Result<ValuationDistribution, String> {
    s.parse().map_err(|e: pubshare_core::Error| {
        let msg = e.to_string();
        if msg.contains(SPEC_KINDS) { msg } else { format!("{msg}; valid kinds: {SPEC_KINDS}") }
    })
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse()
}

fn parse_init(s: &str) -> Result<Init, String> {
    s.parse()
}

fn parse_cost(s: &str) -> Result<CostKind, String> {
    s.parse()
}
