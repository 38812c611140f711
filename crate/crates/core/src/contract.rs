// SPDX-License-Identifier: Apache-2.0

//! The biometric registry contract: subjects, nodes, role checks and
//! EC-majority elections.
//!
//! Enrollment centers (ECs) hold write access. Authentication centers (ACs)
//! read, and may call only [`ContractCall::LogAuthentication`] among the
//! mutating functions. New ECs appear only at deployment or through an
//! election. Every mutating method validates fully before it touches state,
//! so an `Err` return leaves the state as it was.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest as _, Sha256};

use crate::fcs::Commitment;
use crate::ledger::gas::GasTable;

/// A 128-bit node address as 32 lowercase hex characters.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Address(String);

impl Address {
    pub fn parse(s: &str) -> Result<Self, ContractError> {
        let ok = s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if !ok {
            return Err(ContractError::MalformedAddress(s.to_string()));
        }
        Ok(Address(s.to_string()))
    }

    /// Deterministic address for a human-readable node name.
    pub fn from_name(name: &str) -> Self {
        Address(hex::encode(&Sha256::digest(name.as_bytes())[..16]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.0)
    }
}

impl FromStr for Address {
    type Err = ContractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Address::parse(s)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Address::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ContractError {
    #[error("caller {caller} lacks the required role")]
    Unauthorized { caller: Address },
    #[error("deployment needs at least one initial enrollment center")]
    NoInitialEc,
    #[error("contract already deployed")]
    AlreadyDeployed,
    #[error("subject {id:?} already enrolled")]
    DuplicateSubject { id: String },
    #[error("subject {id:?} not enrolled")]
    UnknownSubject { id: String },
    #[error("malformed commitment: {reason}")]
    MalformedCommitment { reason: String },
    #[error("node {address} already registered")]
    DuplicateNode { address: Address },
    #[error("node {address} not registered")]
    UnknownNode { address: Address },
    #[error("enrollment centers can only be created by election")]
    DirectEcCreation,
    #[error("{voter} already voted on {candidate}")]
    AlreadyVoted { voter: Address, candidate: Address },
    #[error("{candidate} is not an authentication-only node")]
    NotACandidate { candidate: Address },
    #[error("cannot remove the last enrollment center")]
    LastEcProtection,
    #[error("modality index must be at least 1")]
    InvalidModality,
    #[error("malformed address {0:?}")]
    MalformedAddress(String),
}

/// Names of every contract function, reads included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FunctionName {
    Deploy,
    SetSubjects,
    GetSubjects,
    UpdateSubjects,
    DelSubjects,
    SetNodes,
    GetNodes,
    UpdateNodes,
    DelNodes,
    LogAuthentication,
}

impl FunctionName {
    pub const ALL: [FunctionName; 10] = [
        FunctionName::Deploy,
        FunctionName::SetSubjects,
        FunctionName::GetSubjects,
        FunctionName::UpdateSubjects,
        FunctionName::DelSubjects,
        FunctionName::SetNodes,
        FunctionName::GetNodes,
        FunctionName::UpdateNodes,
        FunctionName::DelNodes,
        FunctionName::LogAuthentication,
    ];

    /// Pure reads: never change state, never cost gas.
    pub fn is_read(self) -> bool {
        matches!(self, FunctionName::GetSubjects | FunctionName::GetNodes)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionName::Deploy => "deploy",
            FunctionName::SetSubjects => "setSubjects",
            FunctionName::GetSubjects => "getSubjects",
            FunctionName::UpdateSubjects => "updateSubjects",
            FunctionName::DelSubjects => "delSubjects",
            FunctionName::SetNodes => "setNodes",
            FunctionName::GetNodes => "getNodes",
            FunctionName::UpdateNodes => "updateNodes",
            FunctionName::DelNodes => "delNodes",
            FunctionName::LogAuthentication => "logAuthentication",
        }
    }
}

impl fmt::Display for FunctionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FunctionName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FunctionName::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodeRecord {
    pub id: u64,
    pub name: String,
    pub address: Address,
    pub is_authentication: bool,
    pub is_enrollment: bool,
}

impl NodeRecord {
    /// A read-only authentication center named `name`.
    pub fn authentication(id: u64, name: &str) -> Self {
        NodeRecord {
            id,
            name: name.to_string(),
            address: Address::from_name(name),
            is_authentication: true,
            is_enrollment: false,
        }
    }

    /// An enrollment center named `name`. Only valid at deployment.
    pub fn enrollment(id: u64, name: &str) -> Self {
        NodeRecord {
            is_enrollment: true,
            ..Self::authentication(id, name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubjectRecord {
    pub id: String,
    /// Index `i` holds modality `i + 1`.
    pub commitments: Vec<Commitment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Election {
    pub candidate: Address,
    pub votes: BTreeMap<Address, bool>,
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AuthLogEntry {
    pub subject_id: String,
    pub modality: usize,
    pub outcome: bool,
    pub caller: Address,
}

/// Arguments of the one-time deployment call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DeployArgs {
    /// Offset length every stored commitment must have.
    pub code_length: usize,
    pub initial_ecs: Vec<NodeRecord>,
    pub gas_table: GasTable,
}

/// A state-changing contract call, as carried inside a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "function", content = "args", rename_all = "camelCase", deny_unknown_fields)]
pub enum ContractCall {
    Deploy(DeployArgs),
    #[serde(rename_all = "camelCase")]
    SetSubjects { id: String, commitments: Vec<Commitment> },
    #[serde(rename_all = "camelCase")]
    UpdateSubjects { id: String, commitments: Vec<Commitment> },
    #[serde(rename_all = "camelCase")]
    DelSubjects { id: String },
    #[serde(rename_all = "camelCase")]
    SetNodes { record: NodeRecord },
    #[serde(rename_all = "camelCase")]
    UpdateNodes { candidate: Address, vote: bool },
    #[serde(rename_all = "camelCase")]
    DelNodes { address: Address },
    #[serde(rename_all = "camelCase")]
    LogAuthentication { subject_id: String, modality: usize, outcome: bool },
}

impl ContractCall {
    pub fn function(&self) -> FunctionName {
        match self {
            ContractCall::Deploy(_) => FunctionName::Deploy,
            ContractCall::SetSubjects { .. } => FunctionName::SetSubjects,
            ContractCall::UpdateSubjects { .. } => FunctionName::UpdateSubjects,
            ContractCall::DelSubjects { .. } => FunctionName::DelSubjects,
            ContractCall::SetNodes { .. } => FunctionName::SetNodes,
            ContractCall::UpdateNodes { .. } => FunctionName::UpdateNodes,
            ContractCall::DelNodes { .. } => FunctionName::DelNodes,
            ContractCall::LogAuthentication { .. } => FunctionName::LogAuthentication,
        }
    }

    /// Number of storage slots the call writes, for gas accounting.
    pub fn storage_slots(&self) -> u64 {
        match self {
            ContractCall::Deploy(args) => args.initial_ecs.len() as u64,
            ContractCall::SetSubjects { commitments, .. }
            | ContractCall::UpdateSubjects { commitments, .. } => commitments.len() as u64,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", content = "payload", deny_unknown_fields)]
pub enum Event {
    #[serde(rename_all = "camelCase")]
    ContractDeployed { creator: Address, initial_ecs: Vec<Address> },
    #[serde(rename_all = "camelCase")]
    SubjectEnrolled { id: String, modalities: usize },
    #[serde(rename_all = "camelCase")]
    SubjectUpdated { id: String, modalities: usize },
    #[serde(rename_all = "camelCase")]
    SubjectDeleted { id: String },
    #[serde(rename_all = "camelCase")]
    NodeRegistered { address: Address },
    #[serde(rename_all = "camelCase")]
    VoteRecorded { candidate: Address, voter: Address, vote: bool, open: bool },
    #[serde(rename_all = "camelCase")]
    NodeUpdated { address: Address },
    #[serde(rename_all = "camelCase")]
    NodeDeleted { address: Address },
    #[serde(rename_all = "camelCase")]
    AuthenticationLogged { subject_id: String, modality: usize, outcome: bool, caller: Address },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::ContractDeployed { .. } => "ContractDeployed",
            Event::SubjectEnrolled { .. } => "SubjectEnrolled",
            Event::SubjectUpdated { .. } => "SubjectUpdated",
            Event::SubjectDeleted { .. } => "SubjectDeleted",
            Event::NodeRegistered { .. } => "NodeRegistered",
            Event::VoteRecorded { .. } => "VoteRecorded",
            Event::NodeUpdated { .. } => "NodeUpdated",
            Event::NodeDeleted { .. } => "NodeDeleted",
            Event::AuthenticationLogged { .. } => "AuthenticationLogged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ContractState {
    pub creator: Address,
    pub code_length: usize,
    pub subjects: BTreeMap<String, SubjectRecord>,
    pub nodes: BTreeMap<Address, NodeRecord>,
    pub elections: BTreeMap<Address, Election>,
    pub auth_log: Vec<AuthLogEntry>,
}

impl ContractState {
    pub fn deploy(creator: Address, args: &DeployArgs) -> Result<(Self, Event), ContractError> {
        if args.initial_ecs.is_empty() || args.initial_ecs.iter().any(|n| !n.is_enrollment) {
            return Err(ContractError::NoInitialEc);
        }
        if args.code_length == 0 {
            return Err(ContractError::MalformedCommitment { reason: "code length must be positive".into() });
        }
        let mut nodes = BTreeMap::new();
        for ec in &args.initial_ecs {
            if nodes.insert(ec.address.clone(), ec.clone()).is_some() {
                return Err(ContractError::DuplicateNode { address: ec.address.clone() });
            }
        }
        let event = Event::ContractDeployed {
            creator: creator.clone(),
            initial_ecs: args.initial_ecs.iter().map(|n| n.address.clone()).collect(),
        };
        let state = ContractState {
            creator,
            code_length: args.code_length,
            subjects: BTreeMap::new(),
            nodes,
            elections: BTreeMap::new(),
            auth_log: Vec::new(),
        };
        Ok((state, event))
    }

    /// Dispatches a mutating call on behalf of `caller`.
    pub fn execute(&mut self, caller: &Address, call: &ContractCall) -> Result<Event, ContractError> {
        match call {
            ContractCall::Deploy(_) => Err(ContractError::AlreadyDeployed),
            ContractCall::SetSubjects { id, commitments } => self.set_subjects(caller, id, commitments),
            ContractCall::UpdateSubjects { id, commitments } => {
                self.update_subjects(caller, id, commitments)
            }
            ContractCall::DelSubjects { id } => self.del_subjects(caller, id),
            ContractCall::SetNodes { record } => self.set_nodes(caller, record),
            ContractCall::UpdateNodes { candidate, vote } => self.update_nodes(caller, candidate, *vote),
            ContractCall::DelNodes { address } => self.del_nodes(caller, address),
            ContractCall::LogAuthentication { subject_id, modality, outcome } => {
                self.log_authentication(caller, subject_id, *modality, *outcome)
            }
        }
    }

    pub fn set_subjects(
        &mut self,
        caller: &Address,
        id: &str,
        commitments: &[Commitment],
    ) -> Result<Event, ContractError> {
        self.require_ec(caller)?;
        if self.subjects.contains_key(id) {
            return Err(ContractError::DuplicateSubject { id: id.to_string() });
        }
        self.check_subject(id, commitments)?;
        self.subjects.insert(
            id.to_string(),
            SubjectRecord { id: id.to_string(), commitments: commitments.to_vec() },
        );
        Ok(Event::SubjectEnrolled { id: id.to_string(), modalities: commitments.len() })
    }

    pub fn get_subjects(&self, caller: &Address, id: &str) -> Result<&SubjectRecord, ContractError> {
        self.require_registered(caller)?;
        self.subjects
            .get(id)
            .ok_or_else(|| ContractError::UnknownSubject { id: id.to_string() })
    }

    pub fn update_subjects(
        &mut self,
        caller: &Address,
        id: &str,
        commitments: &[Commitment],
    ) -> Result<Event, ContractError> {
        self.require_ec(caller)?;
        if !self.subjects.contains_key(id) {
            return Err(ContractError::UnknownSubject { id: id.to_string() });
        }
        self.check_subject(id, commitments)?;
        let record = self.subjects.get_mut(id).expect("checked above");
        record.commitments = commitments.to_vec();
        Ok(Event::SubjectUpdated { id: id.to_string(), modalities: commitments.len() })
    }

    pub fn del_subjects(&mut self, caller: &Address, id: &str) -> Result<Event, ContractError> {
        self.require_ec(caller)?;
        self.subjects
            .remove(id)
            .ok_or_else(|| ContractError::UnknownSubject { id: id.to_string() })?;
        Ok(Event::SubjectDeleted { id: id.to_string() })
    }

    pub fn set_nodes(&mut self, caller: &Address, record: &NodeRecord) -> Result<Event, ContractError> {
        self.require_ec(caller)?;
        if record.is_enrollment {
            return Err(ContractError::DirectEcCreation);
        }
        if self.nodes.contains_key(&record.address) {
            return Err(ContractError::DuplicateNode { address: record.address.clone() });
        }
        self.nodes.insert(record.address.clone(), record.clone());
        Ok(Event::NodeRegistered { address: record.address.clone() })
    }

    pub fn get_nodes(&self, caller: &Address, address: &Address) -> Result<&NodeRecord, ContractError> {
        self.require_registered(caller)?;
        self.nodes
            .get(address)
            .ok_or_else(|| ContractError::UnknownNode { address: address.clone() })
    }

    /// Casts `caller`'s vote on elevating `candidate` to EC. A strict
    /// majority of current ECs elevates; once that becomes unreachable the
    /// election closes with no change. Voting on a candidate without an open
    /// election opens one.
    pub fn update_nodes(
        &mut self,
        caller: &Address,
        candidate: &Address,
        vote: bool,
    ) -> Result<Event, ContractError> {
        self.require_ec(caller)?;
        let node = self
            .nodes
            .get(candidate)
            .ok_or_else(|| ContractError::UnknownNode { address: candidate.clone() })?;
        if node.is_enrollment {
            return Err(ContractError::NotACandidate { candidate: candidate.clone() });
        }
        let ecs: Vec<Address> = self.ec_addresses().cloned().collect();
        let mut election = match self.elections.get(candidate) {
            Some(e) if e.open => e.clone(),
            _ => Election { candidate: candidate.clone(), votes: BTreeMap::new(), open: true },
        };
        if election.votes.contains_key(caller) {
            return Err(ContractError::AlreadyVoted { voter: caller.clone(), candidate: candidate.clone() });
        }
        election.votes.insert(caller.clone(), vote);

        let counted = |want: bool| ecs.iter().filter(|a| election.votes.get(*a) == Some(&want)).count();
        let (yes, no) = (counted(true), counted(false));
        let outstanding = ecs.len() - yes - no;
        let threshold = ecs.len() / 2;

        let event = if yes > threshold {
            election.open = false;
            self.nodes.get_mut(candidate).expect("checked above").is_enrollment = true;
            Event::NodeUpdated { address: candidate.clone() }
        } else {
            if yes + outstanding <= threshold {
                election.open = false;
            }
            Event::VoteRecorded {
                candidate: candidate.clone(),
                voter: caller.clone(),
                vote,
                open: election.open,
            }
        };
        self.elections.insert(candidate.clone(), election);
        Ok(event)
    }

    pub fn del_nodes(&mut self, caller: &Address, address: &Address) -> Result<Event, ContractError> {
        self.require_ec(caller)?;
        let node = self
            .nodes
            .get(address)
            .ok_or_else(|| ContractError::UnknownNode { address: address.clone() })?;
        if node.is_enrollment && self.ec_addresses().count() == 1 {
            return Err(ContractError::LastEcProtection);
        }
        self.nodes.remove(address);
        self.elections.remove(address);
        for election in self.elections.values_mut() {
            election.votes.remove(address);
        }
        Ok(Event::NodeDeleted { address: address.clone() })
    }

    /// The single mutating function open to ACs.
    pub fn log_authentication(
        &mut self,
        caller: &Address,
        subject_id: &str,
        modality: usize,
        outcome: bool,
    ) -> Result<Event, ContractError> {
        self.require_registered(caller)?;
        if modality == 0 {
            return Err(ContractError::InvalidModality);
        }
        self.auth_log.push(AuthLogEntry {
            subject_id: subject_id.to_string(),
            modality,
            outcome,
            caller: caller.clone(),
        });
        Ok(Event::AuthenticationLogged {
            subject_id: subject_id.to_string(),
            modality,
            outcome,
            caller: caller.clone(),
        })
    }

    pub fn is_ec(&self, address: &Address) -> bool {
        self.nodes.get(address).is_some_and(|n| n.is_enrollment)
    }

    pub fn ec_addresses(&self) -> impl Iterator<Item = &Address> {
        self.nodes.values().filter(|n| n.is_enrollment).map(|n| &n.address)
    }

    fn require_ec(&self, caller: &Address) -> Result<(), ContractError> {
        if !self.is_ec(caller) {
            return Err(ContractError::Unauthorized { caller: caller.clone() });
        }
        Ok(())
    }

    fn require_registered(&self, caller: &Address) -> Result<(), ContractError> {
        if !self.nodes.contains_key(caller) {
            return Err(ContractError::Unauthorized { caller: caller.clone() });
        }
        Ok(())
    }

    fn check_subject(&self, id: &str, commitments: &[Commitment]) -> Result<(), ContractError> {
        let malformed = |reason: String| Err(ContractError::MalformedCommitment { reason });
        if id.is_empty() {
            return malformed("subject id is empty".into());
        }
        if commitments.is_empty() {
            return malformed("no commitments".into());
        }
        if let Some(c) = commitments.iter().find(|c| c.n() != self.code_length) {
            return malformed(format!("offset has {} bits, code length is {}", c.n(), self.code_length));
        }
        Ok(())
    }
}
