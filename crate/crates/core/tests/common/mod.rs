// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use bioledger::contract::{Address, ContractCall, ContractState, FunctionName, NodeRecord};
use bioledger::ecc::LinearCode;
use bioledger::fcs::{commit, Commitment, FeatureVector};
use bioledger::ledger::{Ledger, LedgerConfig};
use bioledger::Bits;
use rand::seq::SliceRandom;
use rand::Rng;

pub const NAMES: [&str; 7] = ["ec-a", "ec-b", "ec-c", "ac-a", "ac-b", "stranger-a", "stranger-b"];
const SUBJECTS: [&str; 4] = ["s1", "s2", "s3", "s4"];

pub fn addr(name: &str) -> Address {
    Address::from_name(name)
}

/// Three ECs and one registered AC; `ac-b` and the strangers start unknown.
pub fn fresh_ledger() -> Ledger {
    let ecs = ["ec-a", "ec-b", "ec-c"].iter().enumerate().map(|(i, n)| NodeRecord::enrollment(i as u64 + 1, n)).collect();
    let mut ledger = Ledger::genesis(LedgerConfig::new(addr("creator"), 7, ecs)).unwrap();
    let receipt = ledger
        .submit_call(&addr("ec-a"), ContractCall::SetNodes { record: NodeRecord::authentication(4, "ac-a") })
        .unwrap();
    assert!(receipt.succeeded());
    ledger
}

fn commitments<R: Rng>(rng: &mut R, code: &LinearCode) -> Vec<Commitment> {
    let m = rng.gen_range(1..=2);
    (0..m)
        .map(|_| commit(code, &FeatureVector::new(Bits::random(rng, code.n())), rng).unwrap())
        .collect()
}

/// A random caller and a random mutating call over a small name pool, so
/// that duplicates, unknowns and elections all come up.
pub fn random_call<R: Rng>(rng: &mut R, code: &LinearCode) -> (Address, ContractCall) {
    let caller = addr(NAMES.choose(rng).unwrap());
    let subject = SUBJECTS.choose(rng).unwrap().to_string();
    let node = *NAMES.choose(rng).unwrap();
    let call = match rng.gen_range(0..7) {
        0 => ContractCall::SetSubjects { id: subject, commitments: commitments(rng, code) },
        1 => ContractCall::UpdateSubjects { id: subject, commitments: commitments(rng, code) },
        2 => ContractCall::DelSubjects { id: subject },
        3 => {
            let mut record = NodeRecord::authentication(rng.gen_range(10..100), node);
            record.is_enrollment = rng.gen_bool(0.1);
            ContractCall::SetNodes { record }
        }
        4 => ContractCall::UpdateNodes { candidate: addr(node), vote: rng.gen_bool(0.6) },
        5 => ContractCall::DelNodes { address: addr(node) },
        _ => ContractCall::LogAuthentication { subject_id: subject, modality: rng.gen_range(0..3), outcome: rng.gen() },
    };
    (caller, call)
}

/// Role check written against the raw node table: EC-only writes need an
/// enrollment node, the logging call needs any registered node.
pub fn privileged(state: &ContractState, caller: &Address, function: FunctionName) -> bool {
    match state.nodes.get(caller) {
        None => false,
        Some(node) => function == FunctionName::LogAuthentication || node.is_enrollment,
    }
}
