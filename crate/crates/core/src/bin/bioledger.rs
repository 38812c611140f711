// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::rngs::OsRng;
use rand::RngCore;
use serde_json::json;

use bioledger::contract::{Address, NodeRecord};
use bioledger::ecc::{CodeDescription, CodeSpec, LinearCode};
use bioledger::fcs::FeatureVector;
use bioledger::ledger::{Ledger, LedgerConfig};
use bioledger::protocol;
use bioledger::report::GasReport;
use bioledger::scenario::{run_scenario, substream, Scenario};
use bioledger::synthbio::{BiometricTemplate, IdentityExtractor};
use bioledger::sweep;
use bioledger::Bits;

#[derive(Parser)]
#[command(name = "bioledger", version, about = "Fuzzy-commitment biometric authentication on a simulated ledger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LedgerFile {
    /// JSONL ledger file
    #[arg(long)]
    ledger: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Create a ledger holding only the deployment block.
    Deploy {
        #[command(flatten)]
        file: LedgerFile,
        #[arg(long, default_value = "hamming:3")]
        code: String,
        /// Initial enrollment center names
        #[arg(long = "ec", required = true)]
        ecs: Vec<String>,
        #[arg(long, default_value = "creator")]
        creator: String,
    },
    /// Register an authentication center.
    RegisterNode {
        #[command(flatten)]
        file: LedgerFile,
        #[arg(long)]
        caller: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        id: Option<u64>,
    },
    /// Commit one template per modality and store the subject.
    Enroll {
        #[command(flatten)]
        file: LedgerFile,
        #[arg(long, default_value = "hamming:3")]
        code: String,
        #[arg(long)]
        caller: String,
        #[arg(long)]
        subject: String,
        /// Template bitstring, once per modality
        #[arg(long = "template", required = true)]
        templates: Vec<String>,
        /// Witness RNG seed; the OS RNG is used when absent
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Open a stored commitment with a fresh reading.
    Authenticate {
        #[command(flatten)]
        file: LedgerFile,
        #[arg(long, default_value = "hamming:3")]
        code: String,
        #[arg(long)]
        caller: String,
        #[arg(long)]
        subject: String,
        #[arg(long, default_value_t = 1)]
        modality: usize,
        #[arg(long)]
        reading: String,
        #[arg(long)]
        log_auth: bool,
    },
    /// Delete a subject.
    Revoke {
        #[command(flatten)]
        file: LedgerFile,
        #[arg(long)]
        caller: String,
        #[arg(long)]
        subject: String,
    },
    /// Vote on elevating an authentication center, votes as `name:yes|no`.
    Elect {
        #[command(flatten)]
        file: LedgerFile,
        #[arg(long)]
        candidate: String,
        #[arg(long = "vote", required = true)]
        votes: Vec<String>,
    },
    /// Run a scenario file, or the bundled demo when given `demo`.
    Run {
        scenario: String,
        /// Write the JSONL ledger here
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        code: Option<String>,
        #[arg(long)]
        flip_prob: Option<f64>,
        #[arg(long)]
        log_auth: bool,
    },
    /// Empirical versus analytic FAR/FRR as CSV.
    Sweep {
        #[arg(long = "code", default_value = "hamming:3")]
        codes: Vec<String>,
        #[arg(long = "flip-prob", value_delimiter = ',', default_values_t = [0.01, 0.05])]
        flip_probs: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-function gas of a ledger file.
    GasReport {
        file: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Integrity checks on a ledger file.
    Ledger {
        #[command(subcommand)]
        action: LedgerAction,
    },
}

#[derive(Subcommand)]
enum LedgerAction {
    /// Check the hash chain.
    Verify { file: PathBuf },
    /// Re-execute from genesis and print the final state.
    Replay { file: PathBuf },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        CliError { kind, message: message.to_string() }
    }
}

macro_rules! from_error {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new($kind, e)
            }
        })*
    };
}

from_error! {
    std::io::Error => "Io",
    serde_json::Error => "Json",
    bioledger::EccError => "Ecc",
    bioledger::LedgerError => "Ledger",
    bioledger::ContractError => "Contract",
    bioledger::protocol::ProtocolError => "Protocol",
    bioledger::scenario::ScenarioError => "ScenarioInvalid",
    bioledger::sweep::SweepError => "Sweep",
    bioledger::bits::ParseBitsError => "BadBits",
}

fn address(name: &str) -> Address {
    Address::parse(name).unwrap_or_else(|_| Address::from_name(name))
}

fn parse_code(spec: &str) -> Result<LinearCode, CliError> {
    if let Some((family, param)) = spec.split_once(':') {
        let param: usize = param.parse().map_err(|_| CliError::new("BadCode", format!("bad parameter in {spec:?}")))?;
        let spec = match family {
            "hamming" => CodeSpec::Hamming { r: param },
            "repetition" => CodeSpec::Repetition { n: param },
            _ => return Err(CliError::new("BadCode", format!("unknown code family {family:?}"))),
        };
        return Ok(spec.build()?);
    }
    let text = fs::read_to_string(spec)?;
    if let Ok(desc) = serde_json::from_str::<CodeDescription>(&text) {
        return Ok(LinearCode::from_description(&desc)?);
    }
    Ok(serde_json::from_str::<CodeSpec>(&text)?.build()?)
}

fn load(path: &Path) -> Result<Ledger, CliError> {
    Ok(Ledger::replay(&fs::read_to_string(path)?)?)
}

fn save(path: &Path, ledger: &Ledger) -> Result<(), CliError> {
    Ok(fs::write(path, ledger.to_jsonl())?)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Deploy { file, code, ecs, creator } => {
            let code = parse_code(&code)?;
            let records = ecs.iter().enumerate().map(|(i, n)| NodeRecord::enrollment(i as u64 + 1, n)).collect();
            let ledger = Ledger::genesis(LedgerConfig::new(address(&creator), code.n(), records))?;
            save(&file.ledger, &ledger)?;
            print_json(&ledger.head().receipts[0])
        }
        Command::RegisterNode { file, caller, name, id } => {
            let mut ledger = load(&file.ledger)?;
            let id = id.unwrap_or(ledger.state().nodes.len() as u64 + 1);
            let result = protocol::register_node_flow(&mut ledger, &address(&caller), NodeRecord::authentication(id, &name));
            save(&file.ledger, &ledger)?;
            print_json(&result?)
        }
        Command::Enroll { file, code, caller, subject, templates, seed } => {
            let code = parse_code(&code)?;
            let mut ledger = load(&file.ledger)?;
            let bio = templates
                .iter()
                .map(|t| t.parse::<Bits>().map(FeatureVector::new))
                .collect::<Result<Vec<_>, _>>()?;
            let mut rng: Box<dyn RngCore> = match seed {
                Some(s) => Box::new(substream(s, "witness")),
                None => Box::new(OsRng),
            };
            let result = protocol::enroll_user(&mut ledger, &code, &address(&caller), &subject, &bio, &mut *rng);
            save(&file.ledger, &ledger)?;
            print_json(&result?)
        }
        Command::Authenticate { file, code, caller, subject, modality, reading, log_auth } => {
            let code = parse_code(&code)?;
            let mut ledger = load(&file.ledger)?;
            let acquisition = BiometricTemplate { bits: reading.parse()?, modality };
            let result = protocol::authenticate_user(
                &mut ledger,
                &code,
                &address(&caller),
                &subject,
                modality,
                &acquisition,
                &IdentityExtractor,
                log_auth,
            );
            if log_auth {
                save(&file.ledger, &ledger)?;
            }
            print_json(&result?)
        }
        Command::Revoke { file, caller, subject } => {
            let mut ledger = load(&file.ledger)?;
            let result = protocol::revoke_user(&mut ledger, &address(&caller), &subject);
            save(&file.ledger, &ledger)?;
            print_json(&result?)
        }
        Command::Elect { file, candidate, votes } => {
            let votes = votes
                .iter()
                .map(|v| match v.rsplit_once(':') {
                    Some((who, "yes")) => Ok((address(who), true)),
                    Some((who, "no")) => Ok((address(who), false)),
                    _ => Err(CliError::new("BadVote", format!("expected name:yes or name:no, got {v:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut ledger = load(&file.ledger)?;
            let result = protocol::election_flow(&mut ledger, &address(&candidate), &votes);
            save(&file.ledger, &ledger)?;
            print_json(&json!({ "candidate": candidate, "elevated": result? }))
        }
        Command::Run { scenario, ledger, report, seed, code, flip_prob, log_auth } => {
            let mut s = if scenario == "demo" {
                Scenario::demo()
            } else {
                Scenario::from_json(&fs::read_to_string(&scenario)?)?
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(code) = code {
                s.code = parse_code(&code)?.spec();
            }
            if let Some(p) = flip_prob {
                s.flip_probability = p;
            }
            s.log_auth_results |= log_auth;
            let run = run_scenario(&s)?;
            if let Some(path) = ledger {
                fs::write(path, run.jsonl())?;
            }
            match report {
                Some(path) => Ok(fs::write(path, run.report_json() + "\n")?),
                None => Ok(println!("{}", run.report_json())),
            }
        }
        Command::Sweep { codes, flip_probs, trials, seed } => {
            let codes = codes.iter().map(|c| parse_code(c)).collect::<Result<Vec<_>, _>>()?;
            let rows = sweep::far_frr_sweep(&codes, &flip_probs, trials, seed)?;
            print!("{}", sweep::to_csv(&rows));
            Ok(())
        }
        Command::GasReport { file, csv } => {
            let report = GasReport::from_jsonl(&fs::read_to_string(file)?)?;
            if csv {
                print!("{}", report.to_csv());
            } else {
                print!("{}", report.to_text());
            }
            report.check_dichotomy().map_err(|m| CliError::new("GasDichotomy", m))
        }
        Command::Ledger { action: LedgerAction::Verify { file } } => {
            let blocks = bioledger::ledger::parse_jsonl(&fs::read_to_string(file)?)?;
            if !bioledger::ledger::verify_chain(&blocks) {
                return Err(bioledger::LedgerError::CorruptChain { height: None, reason: "hash chain does not verify".into() }.into());
            }
            print_json(&json!({ "valid": true, "blocks": blocks.len(), "head": blocks.last().map(|b| &b.block_hash) }))
        }
        Command::Ledger { action: LedgerAction::Replay { file } } => print_json(load(&file)?.state()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind, "message": e.message }));
            ExitCode::FAILURE
        }
    }
}
