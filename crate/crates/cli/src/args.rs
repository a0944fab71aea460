use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use qpc_sim::channel::{AdversaryModel, BasisPolicy, Taps};
use qpc_sim::{Secret, SessionConfig, UserId};

#[derive(Debug, Parser)]
#[command(
    name = "qpc-sim",
    version,
    about = "Multi-user quantum private comparison simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Run one configuration (optionally many trials)
    Run(SessionArgs),
    /// Run every combination of the listed users/bits/decoys values
    Sweep(SessionArgs),
    /// Check the protocol's exhaustive identities
    Verify(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Write output here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Random,
    Z,
    X,
}

impl From<BasisArg> for BasisPolicy {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Random => BasisPolicy::RandomZOrX,
            BasisArg::Z => BasisPolicy::AlwaysZ,
            BasisArg::X => BasisPolicy::AlwaysX,
        }
    }
}

/// `none`, `intercept-resend`, `measure-resend` or `dishonest-user:<i>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryArg {
    None,
    InterceptResend,
    MeasureResend,
    DishonestUser(usize),
}

impl FromStr for AdversaryArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "intercept-resend" => Ok(Self::InterceptResend),
            "measure-resend" => Ok(Self::MeasureResend),
            _ => {
                let actor = s
                    .strip_prefix("dishonest-user:")
                    .ok_or_else(|| format!("unknown adversary {s:?}"))?;
                match actor.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(Self::DishonestUser(i)),
                    _ => Err(format!("bad dishonest-user index {actor:?}")),
                }
            }
        }
    }
}

/// Which link(s) the adversary taps: a user number or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapArg {
    User(usize),
    All,
}

impl FromStr for TapArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Self::All);
        }
        match s.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(Self::User(i)),
            _ => Err(format!("expected a user number or `all`, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SessionArgs {
    /// Number of users K (comma list for sweep)
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(2..))]
    pub users: Vec<u64>,
    /// Secret bit-length L (comma list for sweep)
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub bits: Vec<u64>,
    /// Decoys per link d; defaults to L (comma list for sweep)
    #[arg(long, value_delimiter = ',')]
    pub decoys: Vec<u64>,
    #[arg(long, default_value = "none")]
    pub adversary: AdversaryArg,
    /// Adversary basis choice
    #[arg(long, value_enum, default_value = "random")]
    pub basis: BasisArg,
    /// Link to tap; defaults to P1's (or the first user other than a dishonest actor)
    #[arg(long)]
    pub tap: Option<TapArg>,
    #[arg(long, env = "QPC_SIM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Explicit secret for the next user (0b..., 0x... or decimal); repeat once per user
    #[arg(long = "secret")]
    pub secrets: Vec<Secret>,
    /// Include the full transcript in JSON output
    #[arg(long)]
    pub dump_transcript: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Sweep,
    Verify,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub mode: Mode,
    /// One entry for `run`, the cartesian product for `sweep`, none for `verify`.
    pub points: Vec<SessionConfig>,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub dump_transcript: bool,
}

impl RunSpec {
    pub fn config(&self) -> Option<&SessionConfig> {
        self.points.first()
    }
}

fn usage(msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(ErrorKind::ValueValidation, msg)
}

fn adversary_model(args: &SessionArgs) -> AdversaryModel {
    let policy = args.basis.into();
    let mut model = match args.adversary {
        AdversaryArg::None => AdversaryModel::none(),
        AdversaryArg::InterceptResend => AdversaryModel::intercept_resend(policy),
        AdversaryArg::MeasureResend => AdversaryModel::measure_resend(policy),
        AdversaryArg::DishonestUser(i) => AdversaryModel::dishonest_user(UserId(i), policy),
    };
    match args.tap {
        Some(TapArg::User(i)) => model = model.with_taps(Taps::Link(UserId(i))),
        Some(TapArg::All) => model = model.with_taps(Taps::AllLinks),
        None => {}
    }
    model
}

fn point(
    args: &SessionArgs,
    users: u64,
    bits: u64,
    decoys: Option<u64>,
) -> Result<SessionConfig, clap::Error> {
    let users = users as usize;
    let bits = bits as usize;
    let mut config = SessionConfig::new(users, bits);
    config.decoys = decoys.map_or(bits, |d| d as usize);
    config.adversary = adversary_model(args);
    config.seed = args.seed;
    config.trials = args.trials;
    if !args.secrets.is_empty() {
        let fitted = args
            .secrets
            .iter()
            .map(|s| s.fit(bits))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        config.secrets = Some(fitted);
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn single(values: &[u64], name: &str, default: u64) -> Result<u64, clap::Error> {
    match values {
        [] => Ok(default),
        [v] => Ok(*v),
        _ => Err(usage(format!(
            "--{name} takes one value for `run`; use `sweep` for lists"
        ))),
    }
}

/// Turns parsed flags into a [`RunSpec`], or a usage error (exit status 2).
pub fn resolve(cli: Cli) -> Result<RunSpec, clap::Error> {
    match cli.command {
        CommandArgs::Verify(out) => Ok(RunSpec {
            mode: Mode::Verify,
            points: Vec::new(),
            format: out.format,
            output: out.output,
            dump_transcript: false,
        }),
        CommandArgs::Run(args) => {
            let users = single(&args.users, "users", 2)?;
            let bits = single(&args.bits, "bits", 8)?;
            let decoys = match args.decoys.as_slice() {
                [] => None,
                _ => Some(single(&args.decoys, "decoys", 0)?),
            };
            let config = point(&args, users, bits, decoys)?;
            Ok(RunSpec {
                mode: Mode::Run,
                points: vec![config],
                format: args.output.format,
                output: args.output.output.clone(),
                dump_transcript: args.dump_transcript,
            })
        }
        CommandArgs::Sweep(args) => {
            if args.users.is_empty() && args.bits.is_empty() && args.decoys.is_empty() {
                return Err(usage(
                    "sweep needs at least one of --users, --bits, --decoys with a value list",
                ));
            }
            let users = if args.users.is_empty() {
                vec![2]
            } else {
                args.users.clone()
            };
            let bits = if args.bits.is_empty() {
                vec![8]
            } else {
                args.bits.clone()
            };
            let decoys: Vec<Option<u64>> = if args.decoys.is_empty() {
                vec![None]
            } else {
                args.decoys.iter().copied().map(Some).collect()
            };
            let mut points = Vec::new();
            for &k in &users {
                for &l in &bits {
                    for &d in &decoys {
                        points.push(point(&args, k, l, d)?);
                    }
                }
            }
            Ok(RunSpec {
                mode: Mode::Sweep,
                points,
                format: args.output.format,
                output: args.output.output.clone(),
                dump_transcript: args.dump_transcript,
            })
        }
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    resolve(Cli::try_parse_from(argv)?)
}
