// SPDX-License-Identifier: Apache-2.0

//! Batch scenarios: a JSON document describing the deployment, the users
//! and an ordered list of protocol steps. Running one yields the ledger and
//! a summary report, and is a pure function of the document.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::contract::{Address, ContractError, NodeRecord};
use crate::ecc::{CodeSpec, LinearCode};
use crate::fcs::FeatureVector;
use crate::ledger::{Ledger, LedgerConfig};
use crate::protocol::{self, AuthReason, ProtocolError};
use crate::synthbio::{acquire, generate_template, BiometricTemplate, FeatureExtractor, IdentityExtractor, NoiseModel};

pub const DEMO_JSON: &str = include_str!("../scenarios/demo.json");

/// Independent RNG derived from the scenario seed and a label.
pub fn substream(seed: u64, label: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario{}: {reason}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    ScenarioInvalid { step: Option<usize>, reason: String },
}

impl ScenarioError {
    fn at(step: impl Into<Option<usize>>, reason: impl ToString) -> Self {
        ScenarioError::ScenarioInvalid { step: step.into(), reason: reason.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Enrollment,
    Authentication,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSeed {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttemptKind {
    #[default]
    Genuine,
    Impostor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteSeed {
    pub voter: String,
    pub vote: bool,
}

fn one() -> usize {
    1
}

/// One protocol action. `caller` defaults to the first EC, or the first AC
/// for authentications. `users` defaults to every user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum Step {
    RegisterNode {
        name: String,
        caller: Option<String>,
    },
    Enroll {
        users: Option<Vec<String>>,
        caller: Option<String>,
    },
    Authenticate {
        users: Option<Vec<String>>,
        /// Every modality when absent.
        modality: Option<usize>,
        #[serde(default)]
        kind: AttemptKind,
        #[serde(default = "one")]
        rounds: usize,
        caller: Option<String>,
    },
    UpdateSubject {
        user: String,
        caller: Option<String>,
    },
    Elect {
        candidate: String,
        votes: Vec<VoteSeed>,
    },
    DeleteNode {
        name: String,
        caller: Option<String>,
    },
    Revoke {
        user: String,
        caller: Option<String>,
    },
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub code: CodeSpec,
    pub flip_probability: f64,
    #[serde(default = "two")]
    pub modalities: usize,
    pub users: usize,
    pub nodes: Vec<NodeSeed>,
    #[serde(default)]
    pub log_auth_results: bool,
    pub seed: u64,
    /// Kept raw so a bad step is reported with its index.
    pub steps: Vec<serde_json::Value>,
}

impl Scenario {
    pub fn demo() -> Scenario {
        serde_json::from_str(DEMO_JSON).expect("bundled demo parses")
    }

    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::at(None, e))
    }

    pub fn user_names(&self) -> Vec<String> {
        (1..=self.users).map(|i| format!("user-{i:03}")).collect()
    }

    pub fn parsed_steps(&self) -> Result<Vec<Step>, ScenarioError> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, v)| serde_json::from_value(v.clone()).map_err(|e| ScenarioError::at(i, e)))
            .collect()
    }

    /// Enrolled template of `user` for `modality` (1-based).
    pub fn template(&self, code: &LinearCode, user: &str, modality: usize) -> BiometricTemplate {
        let mut rng = substream(self.seed, &format!("template/{user}/{modality}"));
        generate_template(&mut rng, code.n(), modality).expect("n and modality are positive")
    }

    fn validate(&self) -> Result<(LinearCode, NoiseModel), ScenarioError> {
        let code = self.code.build().map_err(|e| ScenarioError::at(None, e))?;
        if code.t() == 0 {
            return Err(ScenarioError::at(None, "code corrects no errors"));
        }
        let noise = NoiseModel::new(self.flip_probability).map_err(|e| ScenarioError::at(None, e))?;
        if self.modalities == 0 {
            return Err(ScenarioError::at(None, "modalities must be at least 1"));
        }
        if !self.nodes.iter().any(|n| n.role == NodeRole::Enrollment) {
            return Err(ScenarioError::at(None, "no enrollment node"));
        }
        let mut names: Vec<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(ScenarioError::at(None, "duplicate node name"));
        }
        Ok((code, noise))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub attempts: u64,
    pub accepted: u64,
}

impl Tally {
    fn record(&mut self, accepted: bool) {
        self.attempts += 1;
        self.accepted += accepted as u64;
    }

    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModalityTally {
    pub modality: usize,
    pub genuine: Tally,
    pub impostor: Tally,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RevertedStep {
    /// `None` for the setup phase before the first step.
    pub step: Option<usize>,
    pub error: ContractError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElectionResult {
    pub candidate: String,
    pub elevated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub blocks: u64,
    pub enrollments: u64,
    pub updates: u64,
    pub revocations: u64,
    pub authentications: u64,
    pub unknown_subject: u64,
    pub decoding_failures: u64,
    pub per_modality: Vec<ModalityTally>,
    pub elections: Vec<ElectionResult>,
    pub reverted: Vec<RevertedStep>,
    pub gas_by_function: BTreeMap<String, u64>,
    pub events: Vec<String>,
}

pub struct ScenarioRun {
    pub ledger: Ledger,
    pub report: Report,
}

impl ScenarioRun {
    pub fn jsonl(&self) -> String {
        self.ledger.to_jsonl()
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("reports serialize")
    }
}

struct Runner<'a> {
    scenario: &'a Scenario,
    code: LinearCode,
    noise: NoiseModel,
    ledger: Ledger,
    users: Vec<String>,
    default_ec: Address,
    default_ac: Address,
    witness_rng: ChaCha20Rng,
    noise_rng: ChaCha20Rng,
    impostor_rng: ChaCha20Rng,
    report: Report,
    next_node_id: u64,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun, ScenarioError> {
    let (code, noise) = scenario.validate()?;
    let steps = scenario.parsed_steps()?;

    let ecs: Vec<NodeRecord> = scenario
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.role == NodeRole::Enrollment)
        .map(|(i, n)| NodeRecord::enrollment(i as u64 + 1, &n.name))
        .collect();
    let default_ec = ecs[0].address.clone();
    let config = LedgerConfig::new(Address::from_name("creator"), code.n(), ecs);
    let ledger = Ledger::genesis(config).map_err(|e| ScenarioError::at(None, e))?;
    let default_ac = scenario
        .nodes
        .iter()
        .find(|n| n.role == NodeRole::Authentication)
        .map(|n| Address::from_name(&n.name))
        .unwrap_or_else(|| default_ec.clone());

    let seed = scenario.seed;
    let mut runner = Runner {
        scenario,
        code,
        noise,
        ledger,
        users: scenario.user_names(),
        default_ec,
        default_ac,
        witness_rng: substream(seed, "witness"),
        noise_rng: substream(seed, "noise"),
        impostor_rng: substream(seed, "impostor"),
        report: Report {
            per_modality: (1..=scenario.modalities).map(|m| ModalityTally { modality: m, ..Default::default() }).collect(),
            ..Default::default()
        },
        next_node_id: scenario.nodes.len() as u64 + 1,
    };

    for (i, node) in scenario.nodes.iter().enumerate() {
        if node.role == NodeRole::Authentication {
            let record = NodeRecord::authentication(i as u64 + 1, &node.name);
            let ec = runner.default_ec.clone();
            let r = protocol::register_node_flow(&mut runner.ledger, &ec, record).map(drop);
            runner.outcome(None, r)?;
        }
    }
    for (i, step) in steps.iter().enumerate() {
        runner.step(i, step)?;
    }
    Ok(runner.finish())
}

impl Runner<'_> {
    fn caller(&self, name: &Option<String>, default: &Address) -> Address {
        name.as_deref().map(Address::from_name).unwrap_or_else(|| default.clone())
    }

    fn users(&self, step: usize, selection: &Option<Vec<String>>) -> Result<Vec<String>, ScenarioError> {
        match selection {
            None => Ok(self.users.clone()),
            Some(list) => {
                for u in list {
                    self.check_user(step, u)?;
                }
                Ok(list.clone())
            }
        }
    }

    fn check_user(&self, step: usize, user: &str) -> Result<(), ScenarioError> {
        if self.users.iter().any(|u| u == user) {
            Ok(())
        } else {
            Err(ScenarioError::at(step, format!("unknown user {user:?}")))
        }
    }

    fn biometrics(&self, user: &str) -> Vec<FeatureVector> {
        (1..=self.scenario.modalities)
            .map(|m| IdentityExtractor.extract(&self.scenario.template(&self.code, user, m)))
            .collect()
    }

    /// Contract reverts are part of a scenario's story and only noted;
    /// anything else aborts the run.
    fn outcome<T>(&mut self, step: Option<usize>, result: Result<T, ProtocolError>) -> Result<Option<T>, ScenarioError> {
        match result {
            Ok(v) => Ok(Some(v)),
            Err(ProtocolError::Contract(error)) => {
                self.report.reverted.push(RevertedStep { step, error });
                Ok(None)
            }
            Err(e) => Err(ScenarioError::at(step, e)),
        }
    }

    fn step(&mut self, i: usize, step: &Step) -> Result<(), ScenarioError> {
        match step {
            Step::RegisterNode { name, caller } => {
                let ec = self.caller(caller, &self.default_ec);
                let record = NodeRecord::authentication(self.next_node_id, name);
                self.next_node_id += 1;
                let r = protocol::register_node_flow(&mut self.ledger, &ec, record);
                self.outcome(Some(i), r)?;
            }
            Step::Enroll { users, caller } => {
                let ec = self.caller(caller, &self.default_ec);
                for user in self.users(i, users)? {
                    let bio = self.biometrics(&user);
                    let r = protocol::enroll_user(&mut self.ledger, &self.code, &ec, &user, &bio, &mut self.witness_rng);
                    if self.outcome(Some(i), r)?.is_some() {
                        self.report.enrollments += 1;
                    }
                }
            }
            Step::UpdateSubject { user, caller } => {
                self.check_user(i, user)?;
                let ec = self.caller(caller, &self.default_ec);
                let bio = self.biometrics(user);
                let r = protocol::update_user(&mut self.ledger, &self.code, &ec, user, &bio, &mut self.witness_rng);
                if self.outcome(Some(i), r)?.is_some() {
                    self.report.updates += 1;
                }
            }
            Step::Revoke { user, caller } => {
                self.check_user(i, user)?;
                let ec = self.caller(caller, &self.default_ec);
                let r = protocol::revoke_user(&mut self.ledger, &ec, user);
                if self.outcome(Some(i), r)?.is_some() {
                    self.report.revocations += 1;
                }
            }
            Step::DeleteNode { name, caller } => {
                let ec = self.caller(caller, &self.default_ec);
                let r = protocol::delete_node_flow(&mut self.ledger, &ec, &Address::from_name(name));
                self.outcome(Some(i), r)?;
            }
            Step::Elect { candidate, votes } => {
                let votes: Vec<(Address, bool)> = votes.iter().map(|v| (Address::from_name(&v.voter), v.vote)).collect();
                let r = protocol::election_flow(&mut self.ledger, &Address::from_name(candidate), &votes);
                if let Some(elevated) = self.outcome(Some(i), r)? {
                    self.report.elections.push(ElectionResult { candidate: candidate.clone(), elevated });
                }
            }
            Step::Authenticate { users, modality, kind, rounds, caller } => {
                let ac = self.caller(caller, &self.default_ac);
                let m = self.scenario.modalities;
                let modalities: Vec<usize> = match modality {
                    Some(x) if *x == 0 || *x > m => {
                        return Err(ScenarioError::at(i, format!("modality {x} out of range 1..={m}")))
                    }
                    Some(x) => vec![*x],
                    None => (1..=m).collect(),
                };
                let users = self.users(i, users)?;
                for _ in 0..*rounds {
                    for user in &users {
                        for &modality in &modalities {
                            self.authenticate(i, &ac, user, modality, *kind)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn authenticate(
        &mut self,
        step: usize,
        ac: &Address,
        user: &str,
        modality: usize,
        kind: AttemptKind,
    ) -> Result<(), ScenarioError> {
        let acquisition = match kind {
            AttemptKind::Genuine => {
                let template = self.scenario.template(&self.code, user, modality);
                acquire(&template, &self.noise, &mut self.noise_rng)
            }
            AttemptKind::Impostor => generate_template(&mut self.impostor_rng, self.code.n(), modality)
                .expect("n and modality are positive"),
        };
        let log = self.scenario.log_auth_results;
        let r = protocol::authenticate_user(&mut self.ledger, &self.code, ac, user, modality, &acquisition, &IdentityExtractor, log);
        let Some(out) = self.outcome(Some(step), r)? else { return Ok(()) };
        self.report.authentications += 1;
        match out.reason {
            AuthReason::UnknownSubject => self.report.unknown_subject += 1,
            reason => {
                if reason == AuthReason::DecodingFailure {
                    self.report.decoding_failures += 1;
                }
                let tally = &mut self.report.per_modality[modality - 1];
                match kind {
                    AttemptKind::Genuine => tally.genuine.record(out.accepted),
                    AttemptKind::Impostor => tally.impostor.record(out.accepted),
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> ScenarioRun {
        for block in self.ledger.blocks() {
            let f = block.transactions[0].call.function();
            *self.report.gas_by_function.entry(f.as_str().to_string()).or_default() += block.receipts[0].gas_used;
            if let Some(event) = &block.receipts[0].event {
                self.report.events.push(event.name().to_string());
            }
        }
        self.report.blocks = self.ledger.blocks().len() as u64;
        ScenarioRun { ledger: self.ledger, report: self.report }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(steps: serde_json::Value) -> Scenario {
        serde_json::from_value(serde_json::json!({
            "code": {"family": "hamming", "r": 3},
            "flipProbability": 0.0,
            "modalities": 1,
            "users": 2,
            "nodes": [{"name": "ec", "role": "enrollment"}, {"name": "ac", "role": "authentication"}],
            "seed": 7,
            "steps": steps,
        }))
        .unwrap()
    }

    #[test]
    fn substreams_differ_by_label_and_seed() {
        use rand::RngCore;
        let a = substream(1, "noise").next_u64();
        assert_eq!(a, substream(1, "noise").next_u64());
        assert_ne!(a, substream(1, "witness").next_u64());
        assert_ne!(a, substream(2, "noise").next_u64());
    }

    #[test]
    fn noiseless_genuine_runs_always_accept() {
        let s = tiny(serde_json::json!([
            {"type": "enroll"},
            {"type": "authenticate", "rounds": 5},
        ]));
        let run = run_scenario(&s).unwrap();
        assert_eq!(run.report.enrollments, 2);
        assert_eq!(run.report.per_modality[0].genuine, Tally { attempts: 10, accepted: 10 });
        assert!(run.ledger.verify());
    }

    #[test]
    fn unknown_step_type_names_the_step() {
        let s = tiny(serde_json::json!([{"type": "enroll"}, {"type": "teleport"}]));
        match run_scenario(&s) {
            Err(ScenarioError::ScenarioInvalid { step: Some(1), reason }) => assert!(reason.contains("teleport")),
            other => panic!("{:?}", other.err()),
        }
    }

    #[test]
    fn unknown_user_is_invalid() {
        let s = tiny(serde_json::json!([{"type": "revoke", "user": "user-099"}]));
        assert!(matches!(run_scenario(&s), Err(ScenarioError::ScenarioInvalid { step: Some(0), .. })));
    }

    #[test]
    fn reverts_are_reported_not_fatal() {
        let s = tiny(serde_json::json!([
            {"type": "enroll", "caller": "ac"},
            {"type": "revoke", "user": "user-001"},
        ]));
        let run = run_scenario(&s).unwrap();
        assert_eq!(run.report.enrollments, 0);
        // two unauthorized enrollments plus revoking an unknown subject
        assert_eq!(run.report.reverted.len(), 3);
        assert!(matches!(run.report.reverted[0].error, ContractError::Unauthorized { .. }));
        assert!(matches!(run.report.reverted[2].error, ContractError::UnknownSubject { .. }));
    }

    #[test]
    fn templates_do_not_depend_on_other_steps() {
        let a = tiny(serde_json::json!([{"type": "enroll"}]));
        let b = tiny(serde_json::json!([{"type": "enroll"}, {"type": "authenticate", "rounds": 50}]));
        let code = LinearCode::hamming(3).unwrap();
        assert_eq!(a.template(&code, "user-001", 1), b.template(&code, "user-001", 1));
        let (ra, rb) = (run_scenario(&a).unwrap(), run_scenario(&b).unwrap());
        assert_eq!(ra.ledger.blocks()[..4], rb.ledger.blocks()[..4]);
    }

    #[test]
    fn invalid_configuration() {
        let mut s = tiny(serde_json::json!([]));
        s.modalities = 0;
        assert!(run_scenario(&s).is_err());
        let mut s = tiny(serde_json::json!([]));
        s.nodes.retain(|n| n.role == NodeRole::Authentication);
        assert!(run_scenario(&s).is_err());
        let mut s = tiny(serde_json::json!([]));
        s.flip_probability = 0.7;
        assert!(run_scenario(&s).is_err());
    }

    #[test]
    fn demo_parses_and_uses_every_write() {
        let demo = Scenario::demo();
        assert_eq!((demo.users, demo.modalities), (10, 2));
        demo.parsed_steps().unwrap();
    }
}
