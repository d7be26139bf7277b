//! Command-line front end. Every subcommand is a thin layer over the library.
//!
//! Exit codes:
//!
//! | code | kind     | meaning                                                            |
//! |------|----------|--------------------------------------------------------------------|
//! | 0    |          | success                                                            |
//! | 2    | `usage`  | bad flags or arguments                                             |
//! | 3    | `io`     | a file could not be read or written                                |
//! | 4    | `config` | config file or `--set` override rejected                           |
//! | 5    | `key`    | bad key material or address                                        |
//! | 6    | `format` | malformed hex, packet or level                                     |
//! | 7    | `auth`   | packet failed MAC verification                                     |
//! | 8    | `replay` | packet counter is stale                                            |
//! | 9    | `trust`  | observation CSV rejected                                           |
//! | 10   | `link`   | other link-layer rejection (wrong group, below `--min-level`, ...) |
//!
//! On failure one line goes to stderr:
//! `error kind=<kind> code=<code> message=<text>`.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::address::NodeAddress;
use crate::isa::{Scenario, ScenarioPolicy};
use crate::keys::{derive_keyring, derive_session_key, KeyError, KeyRing, SymmetricKey};
use crate::linksec::{decode, encode, CounterState, LinkError, SecurePacket, SecurityLevel, DEFAULT_LOSS_THRESHOLD};
use crate::sim::{compare_fixed_vs_adaptive, run, SimConfig, SimError, BASE_STATION};
use crate::trust::{tables_from_rows, TrustCsvRow, TrustError, TrustWeights};

#[derive(Debug, Parser)]
#[command(
    name = "wsnsec",
    version,
    about = "Sensor network trust, keys, link security and energy simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation; writes the per-node energy CSV and a summary line.
    Run(RunArgs),
    /// Run fixed and adaptive security on the same seed and report savings.
    Compare(CompareArgs),
    /// Derive a node's key ring from a master key.
    DeriveKeys(DeriveArgs),
    /// Seal a payload into a wire packet (hex).
    PacketEncode(EncodeArgs),
    /// Open a wire packet (hex) with a key ring.
    PacketDecode(DecodeArgs),
    /// Print the fields of a wire packet (hex); needs no keys.
    PacketDissect { wire: String },
    /// Trust level per neighbor from an observation CSV.
    Trust(TrustArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML config; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set seed=7 --set energy_model.tx_per_octet=0.001`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Energy CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every node's final trust table as CSV.
    #[arg(long)]
    pub trust_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// military, habitat, agriculture or all. Default: the config's
    /// scenario when a config or override is given, otherwise all three.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Directory for `<scenario>-fixed.csv`, `<scenario>-adaptive.csv` and
    /// `<scenario>-savings.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Master key, 20 hex digits.
    #[arg(long)]
    pub master: String,
    /// Owner address `group:node`.
    #[arg(long)]
    pub node: NodeAddress,
    #[arg(long)]
    pub head: NodeAddress,
    /// Comma-separated neighbor addresses.
    #[arg(long, value_delimiter = ',')]
    pub neighbors: Vec<NodeAddress>,
    /// Session seed from the base station; installs the group session key.
    #[arg(long)]
    pub session_seed: Option<String>,
    /// Write the ring as TOML for packet-encode/packet-decode.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub keyring: PathBuf,
    /// Destination node id in the owner's group (255 = group broadcast).
    #[arg(long)]
    pub dest: u8,
    /// e.g. `L2+auth`.
    #[arg(long)]
    pub level: String,
    /// Counter value of the previous packet in this direction.
    #[arg(long, default_value_t = 0)]
    pub last_counter: u32,
    #[arg(long, default_value = "")]
    pub payload: String,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub keyring: PathBuf,
    #[arg(long)]
    pub wire: String,
    /// Last counter accepted from this sender in this direction.
    #[arg(long, default_value_t = 0)]
    pub last_counter: u32,
    #[arg(long, default_value_t = DEFAULT_LOSS_THRESHOLD)]
    pub loss_threshold: u32,
    /// Reject packets below this level, e.g. `L0+auth`.
    #[arg(long, default_value = "L0")]
    pub min_level: String,
}

#[derive(Debug, Args)]
pub struct TrustArgs {
    /// Observation CSV (see `TRUST_CSV_COLUMNS`; trust and suspicious optional).
    pub input: PathBuf,
    /// Six comma-separated weights; default 1/7 each.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Trust(#[from] TrustError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Sim(_) => "config",
            CliError::Key(_) => "key",
            CliError::Format(_) | CliError::Link(LinkError::Format(_)) => "format",
            CliError::Link(LinkError::Authentication { .. }) => "auth",
            CliError::Link(LinkError::Replay { .. }) => "replay",
            CliError::Link(_) => "link",
            CliError::Trust(_) => "trust",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "io" => 3,
            "config" => 4,
            "key" => 5,
            "format" => 6,
            "auth" => 7,
            "replay" => 8,
            "trust" => 9,
            _ => 10,
        }
    }

    /// The single stderr line for this error.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!(
            "error kind={} code={} message={}",
            self.kind(),
            self.exit_code(),
            msg.trim()
        )
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn out_err(e: std::io::Error) -> CliError {
    io_err(Path::new("<stdout>"), e)
}

fn unhex(what: &str, s: &str) -> Result<Vec<u8>, CliError> {
    hex::decode(s.trim()).map_err(|e| CliError::Format(format!("{what}: {e}")))
}

/// Parses `args` (program name first) and runs the subcommand, writing
/// results to `out`. Help and version requests are printed to `out`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}").map_err(out_err)?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    execute(cli.command, out)
}

pub fn load_config(args: &ConfigArgs) -> Result<SimConfig, CliError> {
    let text = match &args.config {
        Some(p) => read(p)?,
        None => String::new(),
    };
    Ok(SimConfig::from_toml_with_overrides(&text, &args.overrides)?)
}

pub fn load_keyring(path: &Path) -> Result<KeyRing, CliError> {
    toml::from_str(&read(path)?).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn keyring_to_toml(ring: &KeyRing) -> String {
    toml::to_string(ring).expect("key ring serializes")
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run(a) => {
            let cfg = load_config(&a.config)?;
            let report = run(&cfg)?;
            match &a.out {
                Some(p) => write(p, &report.to_csv())?,
                None => out.write_all(report.to_csv().as_bytes()).map_err(out_err)?,
            }
            if let Some(p) = &a.trust_out {
                let mut buf = Vec::new();
                crate::trust::write_trust_csv(&mut buf, report.trust.values().flat_map(|t| t.csv_rows()))?;
                write(p, &String::from_utf8(buf).expect("csv is utf-8"))?;
            }
            writeln!(out, "{}", report.summary()).map_err(out_err)
        }
        Command::Compare(a) => {
            let cfg = load_config(&a.config)?;
            let from_config = a.config.config.is_some() || !a.config.overrides.is_empty();
            let scenarios: Vec<Option<Scenario>> = match a.scenario.as_deref() {
                Some("all") => Scenario::BUILTIN.into_iter().map(Some).collect(),
                Some(name) => vec![Some(
                    name.parse()
                        .map_err(|e: crate::isa::IsaError| CliError::Sim(e.into()))?,
                )],
                None if from_config => vec![None],
                None => Scenario::BUILTIN.into_iter().map(Some).collect(),
            };
            for s in scenarios {
                let mut c = cfg.clone();
                if let Some(s) = s {
                    c.scenario = ScenarioPolicy::builtin(&s, c.energy_model.initial_energy)
                        .map_err(|e| CliError::Sim(e.into()))?;
                }
                let r = compare_fixed_vs_adaptive(&c)?;
                if let Some(dir) = &a.out_dir {
                    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                    let name = r.scenario.short_name().to_string();
                    write(&dir.join(format!("{name}-fixed.csv")), &r.fixed.to_csv())?;
                    write(&dir.join(format!("{name}-adaptive.csv")), &r.adaptive.to_csv())?;
                    write(&dir.join(format!("{name}-savings.csv")), &r.to_csv())?;
                }
                writeln!(out, "{}", r.summary()).map_err(out_err)?;
            }
            Ok(())
        }
        Command::DeriveKeys(a) => {
            let master = SymmetricKey::from_hex(&a.master)?;
            let neighbors: BTreeSet<NodeAddress> = a.neighbors.iter().copied().collect();
            let mut ring = derive_keyring(&master, a.node, a.head, &neighbors)?;
            if let Some(seed) = &a.session_seed {
                let seed = SymmetricKey::from_hex(seed)?;
                ring.session = Some(derive_session_key(&seed, a.node.group_id, BASE_STATION));
            }
            writeln!(out, "node_based={}", ring.node_based.to_hex()).map_err(out_err)?;
            for (n, k) in &ring.pairwise {
                writeln!(out, "pairwise.{n}={}", k.to_hex()).map_err(out_err)?;
            }
            writeln!(out, "broadcast={}", ring.broadcast.to_hex()).map_err(out_err)?;
            if let Some(k) = ring.session {
                writeln!(out, "session={}", k.to_hex()).map_err(out_err)?;
            }
            if let Some(p) = &a.out {
                write(p, &keyring_to_toml(&ring))?;
            }
            Ok(())
        }
        Command::PacketEncode(a) => {
            let ring = load_keyring(&a.keyring)?;
            let level: SecurityLevel = a.level.parse()?;
            let payload = unhex("payload", &a.payload)?;
            let (wire, _) = encode(&ring, a.dest, level, CounterState::new(a.last_counter), &payload)?;
            writeln!(out, "{}", hex::encode(wire)).map_err(out_err)
        }
        Command::PacketDecode(a) => {
            let ring = load_keyring(&a.keyring)?;
            let wire = unhex("wire", &a.wire)?;
            let floor: SecurityLevel = a.min_level.parse()?;
            let d = decode(&wire, &ring, CounterState::new(a.last_counter), a.loss_threshold, floor)?;
            writeln!(out, "payload={}", hex::encode(&d.payload)).map_err(out_err)?;
            writeln!(out, "counter={}", d.counter.value()).map_err(out_err)?;
            writeln!(out, "attempts={}", d.attempts).map_err(out_err)
        }
        Command::PacketDissect { wire } => {
            let p = SecurePacket::parse(&unhex("wire", &wire)?)?;
            writeln!(out, "{p}").map_err(out_err)
        }
        Command::Trust(a) => {
            let weights = match &a.weights {
                None => TrustWeights::default(),
                Some(w) => {
                    let arr: [f64; 6] = w
                        .as_slice()
                        .try_into()
                        .map_err(|_| CliError::Usage(format!("--weights needs 6 values, got {}", w.len())))?;
                    TrustWeights::new(arr)?
                }
            };
            let file = fs::File::open(&a.input).map_err(|e| io_err(&a.input, e))?;
            let rows = TrustCsvRow::read_all(file)?;
            let tables = tables_from_rows(&rows, weights)?;
            writeln!(out, "observer,neighbor,trust").map_err(out_err)?;
            for (observer, table) in &tables {
                for n in table.neighbors() {
                    let t = table.effective_trust(n).expect("row exists");
                    writeln!(out, "{observer},{n},{t:.4}").map_err(out_err)?;
                }
            }
            Ok(())
        }
    }
}
