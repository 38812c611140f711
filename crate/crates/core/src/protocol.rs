// SPDX-License-Identifier: Apache-2.0

//! EC and AC flows on top of the ledger. All commitment work happens
//! off-chain here; only the resulting contract calls are submitted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{Address, ContractCall, ContractError, Event, NodeRecord};
use crate::ecc::LinearCode;
use crate::fcs::{self, FcsError, FeatureVector, Opening};
use crate::ledger::{GasReceipt, Ledger, LedgerError};
use crate::synthbio::{BiometricTemplate, FeatureExtractor};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("contract call failed: {0}")]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Fcs(#[from] FcsError),
    #[error("modality {modality} out of range, subject has {available}")]
    ModalityOutOfRange { modality: usize, available: usize },
    #[error("enrollment needs at least one biometric")]
    NoBiometrics,
    #[error("code length {code} differs from the contract's {contract}")]
    CodeMismatch { code: usize, contract: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuthReason {
    Matched,
    DigestMismatch,
    DecodingFailure,
    UnknownSubject,
}

impl From<Opening> for AuthReason {
    fn from(o: Opening) -> Self {
        match o {
            Opening::Matched => AuthReason::Matched,
            Opening::DigestMismatch => AuthReason::DigestMismatch,
            Opening::DecodingFailure => AuthReason::DecodingFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuthOutcome {
    pub subject_id: String,
    pub modality: usize,
    pub accepted: bool,
    pub reason: AuthReason,
    /// Receipt of the on-chain log entry, when logging was requested.
    pub log_receipt: Option<GasReceipt>,
}

/// Commits every biometric and stores the subject with one `setSubjects`
/// transaction. Witnesses never leave this function.
pub fn enroll_user<R: Rng + ?Sized>(
    ledger: &mut Ledger,
    code: &LinearCode,
    ec: &Address,
    subject_id: &str,
    biometrics: &[FeatureVector],
    rng: &mut R,
) -> Result<Event, ProtocolError> {
    let commitments = commit_all(ledger, code, biometrics, rng)?;
    let call = ContractCall::SetSubjects { id: subject_id.to_string(), commitments };
    expect_success(ledger.submit_call(ec, call)?)
}

/// Replaces a subject's commitments with fresh ones (new witnesses).
pub fn update_user<R: Rng + ?Sized>(
    ledger: &mut Ledger,
    code: &LinearCode,
    ec: &Address,
    subject_id: &str,
    biometrics: &[FeatureVector],
    rng: &mut R,
) -> Result<Event, ProtocolError> {
    let commitments = commit_all(ledger, code, biometrics, rng)?;
    let call = ContractCall::UpdateSubjects { id: subject_id.to_string(), commitments };
    expect_success(ledger.submit_call(ec, call)?)
}

fn commit_all<R: Rng + ?Sized>(
    ledger: &Ledger,
    code: &LinearCode,
    biometrics: &[FeatureVector],
    rng: &mut R,
) -> Result<Vec<fcs::Commitment>, ProtocolError> {
    if biometrics.is_empty() {
        return Err(ProtocolError::NoBiometrics);
    }
    let contract = ledger.state().code_length;
    if code.n() != contract {
        return Err(ProtocolError::CodeMismatch { code: code.n(), contract });
    }
    Ok(biometrics
        .iter()
        .map(|x| fcs::commit(code, x, rng))
        .collect::<Result<_, _>>()?)
}

/// Reads the subject's commitment for `modality` and opens it with the
/// extracted features of `acquisition`. An unknown subject is a rejection,
/// not an error. With `log` set the outcome is written on-chain.
#[allow(clippy::too_many_arguments)]
pub fn authenticate_user(
    ledger: &mut Ledger,
    code: &LinearCode,
    ac: &Address,
    subject_id: &str,
    modality: usize,
    acquisition: &BiometricTemplate,
    extractor: &dyn FeatureExtractor,
    log: bool,
) -> Result<AuthOutcome, ProtocolError> {
    let reason = match ledger.get_subjects(ac, subject_id) {
        Ok(record) => {
            let available = record.commitments.len();
            if modality == 0 || modality > available {
                return Err(ProtocolError::ModalityOutOfRange { modality, available });
            }
            let features = extractor.extract(acquisition);
            fcs::open_detailed(code, &record.commitments[modality - 1], &features)?.into()
        }
        Err(ContractError::UnknownSubject { .. }) => AuthReason::UnknownSubject,
        Err(e) => return Err(e.into()),
    };
    let accepted = reason == AuthReason::Matched;
    let log_receipt = if log {
        let call = ContractCall::LogAuthentication { subject_id: subject_id.to_string(), modality, outcome: accepted };
        let receipt = ledger.submit_call(ac, call)?;
        expect_success(receipt.clone())?;
        Some(receipt)
    } else {
        None
    };
    Ok(AuthOutcome { subject_id: subject_id.to_string(), modality, accepted, reason, log_receipt })
}

pub fn revoke_user(ledger: &mut Ledger, ec: &Address, subject_id: &str) -> Result<Event, ProtocolError> {
    expect_success(ledger.submit_call(ec, ContractCall::DelSubjects { id: subject_id.to_string() })?)
}

pub fn register_node_flow(ledger: &mut Ledger, ec: &Address, record: NodeRecord) -> Result<Event, ProtocolError> {
    expect_success(ledger.submit_call(ec, ContractCall::SetNodes { record })?)
}

pub fn delete_node_flow(ledger: &mut Ledger, ec: &Address, address: &Address) -> Result<Event, ProtocolError> {
    expect_success(ledger.submit_call(ec, ContractCall::DelNodes { address: address.clone() })?)
}

/// Submits the votes in order until the election resolves. Returns whether
/// the candidate ended up an EC.
pub fn election_flow(
    ledger: &mut Ledger,
    candidate: &Address,
    votes: &[(Address, bool)],
) -> Result<bool, ProtocolError> {
    for (voter, vote) in votes {
        let call = ContractCall::UpdateNodes { candidate: candidate.clone(), vote: *vote };
        match expect_success(ledger.submit_call(voter, call)?)? {
            Event::NodeUpdated { .. } => return Ok(true),
            Event::VoteRecorded { open: false, .. } => return Ok(false),
            _ => {}
        }
    }
    Ok(ledger.state().is_ec(candidate))
}

fn expect_success(receipt: GasReceipt) -> Result<Event, ProtocolError> {
    match (receipt.event, receipt.error) {
        (Some(event), None) => Ok(event),
        (_, Some(error)) => Err(ProtocolError::Contract(error)),
        (None, None) => unreachable!("receipts carry an event or an error"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::LedgerConfig;
    use crate::synthbio::{acquire, generate_template, IdentityExtractor, NoiseModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct World {
        ledger: Ledger,
        code: LinearCode,
        ec: Address,
        ac: Address,
        rng: ChaCha20Rng,
    }

    fn world() -> World {
        let code = LinearCode::hamming(3).unwrap();
        let config = LedgerConfig::new(Address::from_name("creator"), 7, vec![NodeRecord::enrollment(1, "ec")]);
        let mut ledger = Ledger::genesis(config).unwrap();
        let ec = Address::from_name("ec");
        register_node_flow(&mut ledger, &ec, NodeRecord::authentication(2, "ac")).unwrap();
        World { ledger, code, ec, ac: Address::from_name("ac"), rng: ChaCha20Rng::seed_from_u64(1) }
    }

    fn templates(w: &mut World, m: usize) -> Vec<BiometricTemplate> {
        (1..=m).map(|i| generate_template(&mut w.rng, 7, i).unwrap()).collect()
    }

    fn features(ts: &[BiometricTemplate]) -> Vec<FeatureVector> {
        ts.iter().map(|t| IdentityExtractor.extract(t)).collect()
    }

    #[test]
    fn enroll_then_authenticate_noiselessly() {
        let mut w = world();
        let ts = templates(&mut w, 2);
        let event = enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng).unwrap();
        assert_eq!(event, Event::SubjectEnrolled { id: "u1".into(), modalities: 2 });
        assert_eq!(w.ledger.get_subjects(&w.ac, "u1").unwrap().commitments.len(), 2);

        for t in &ts {
            let x = acquire(t, &NoiseModel::noiseless(), &mut w.rng);
            let out = authenticate_user(&mut w.ledger, &w.code, &w.ac, "u1", t.modality, &x, &IdentityExtractor, false)
                .unwrap();
            assert!(out.accepted);
            assert_eq!(out.reason, AuthReason::Matched);
            assert!(out.log_receipt.is_none());
        }

        let again = enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng);
        assert!(matches!(again, Err(ProtocolError::Contract(ContractError::DuplicateSubject { .. }))));
    }

    #[test]
    fn single_flip_is_tolerated_double_flip_is_not() {
        let mut w = world();
        let ts = templates(&mut w, 1);
        enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng).unwrap();
        for i in 0..7 {
            let mut probe = ts[0].clone();
            probe.bits.flip(i);
            let out = authenticate_user(&mut w.ledger, &w.code, &w.ac, "u1", 1, &probe, &IdentityExtractor, false).unwrap();
            assert!(out.accepted, "flip {i}");
            probe.bits.flip((i + 1) % 7);
            let out = authenticate_user(&mut w.ledger, &w.code, &w.ac, "u1", 1, &probe, &IdentityExtractor, false).unwrap();
            assert_eq!(out.reason, AuthReason::DigestMismatch);
        }
    }

    #[test]
    fn modality_range_and_unknown_subjects() {
        let mut w = world();
        let ts = templates(&mut w, 1);
        enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng).unwrap();
        let err = authenticate_user(&mut w.ledger, &w.code, &w.ac, "u1", 2, &ts[0], &IdentityExtractor, false);
        assert_eq!(err.unwrap_err(), ProtocolError::ModalityOutOfRange { modality: 2, available: 1 });
        let out = authenticate_user(&mut w.ledger, &w.code, &w.ac, "nobody", 1, &ts[0], &IdentityExtractor, true).unwrap();
        assert_eq!(out.reason, AuthReason::UnknownSubject);
        assert!(!out.accepted);
        assert!(out.log_receipt.unwrap().succeeded());
    }

    #[test]
    fn logging_writes_one_block() {
        let mut w = world();
        let ts = templates(&mut w, 1);
        enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng).unwrap();
        let height = w.ledger.blocks().len();
        let out = authenticate_user(&mut w.ledger, &w.code, &w.ac, "u1", 1, &ts[0], &IdentityExtractor, true).unwrap();
        assert_eq!(w.ledger.blocks().len(), height + 1);
        let receipt = out.log_receipt.unwrap();
        assert!(receipt.gas_used > 0);
        assert!(matches!(receipt.event, Some(Event::AuthenticationLogged { outcome: true, .. })));
    }

    #[test]
    fn revocation() {
        let mut w = world();
        let ts = templates(&mut w, 1);
        enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng).unwrap();
        assert!(matches!(
            revoke_user(&mut w.ledger, &w.ac, "u1"),
            Err(ProtocolError::Contract(ContractError::Unauthorized { .. }))
        ));
        revoke_user(&mut w.ledger, &w.ec, "u1").unwrap();
        let out = authenticate_user(&mut w.ledger, &w.code, &w.ac, "u1", 1, &ts[0], &IdentityExtractor, false).unwrap();
        assert_eq!(out.reason, AuthReason::UnknownSubject);
    }

    #[test]
    fn registration_flow_permissions() {
        let mut w = world();
        let ts = templates(&mut w, 1);
        enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &features(&ts), &mut w.rng).unwrap();
        assert!(w.ledger.get_subjects(&w.ac, "u1").is_ok());
        let err = enroll_user(&mut w.ledger, &w.code, &w.ac, "u2", &features(&ts), &mut w.rng);
        assert!(matches!(err, Err(ProtocolError::Contract(ContractError::Unauthorized { .. }))));
        let dup = register_node_flow(&mut w.ledger, &w.ec, NodeRecord::authentication(5, "ac"));
        assert!(matches!(dup, Err(ProtocolError::Contract(ContractError::DuplicateNode { .. }))));
    }

    #[test]
    fn enrollment_input_checks() {
        let mut w = world();
        assert_eq!(
            enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &[], &mut w.rng).unwrap_err(),
            ProtocolError::NoBiometrics
        );
        let short = vec![FeatureVector::new("101".parse().unwrap())];
        assert!(matches!(
            enroll_user(&mut w.ledger, &w.code, &w.ec, "u1", &short, &mut w.rng),
            Err(ProtocolError::Fcs(FcsError::LengthMismatch { .. }))
        ));
        let other = LinearCode::hamming(4).unwrap();
        let long = vec![FeatureVector::new(crate::Bits::zeros(15))];
        assert_eq!(
            enroll_user(&mut w.ledger, &other, &w.ec, "u1", &long, &mut w.rng).unwrap_err(),
            ProtocolError::CodeMismatch { code: 15, contract: 7 }
        );
    }

    fn three_ec_world() -> (Ledger, [Address; 3], Address) {
        let ecs = ["ec1", "ec2", "ec3"];
        let config = LedgerConfig::new(
            Address::from_name("creator"),
            7,
            ecs.iter().enumerate().map(|(i, n)| NodeRecord::enrollment(i as u64, n)).collect(),
        );
        let mut ledger = Ledger::genesis(config).unwrap();
        let addrs = ecs.map(Address::from_name);
        register_node_flow(&mut ledger, &addrs[0], NodeRecord::authentication(9, "cand")).unwrap();
        (ledger, addrs, Address::from_name("cand"))
    }

    #[test]
    fn election_yes_yes() {
        let (mut ledger, [e1, e2, _], cand) = three_ec_world();
        assert!(election_flow(&mut ledger, &cand, &[(e1, true), (e2, true)]).unwrap());
        assert!(ledger.state().is_ec(&cand));
    }

    #[test]
    fn election_no_yes_no() {
        let (mut ledger, [e1, e2, e3], cand) = three_ec_world();
        assert!(!election_flow(&mut ledger, &cand, &[(e1, false), (e2, true), (e3, false)]).unwrap());
        assert!(!ledger.state().is_ec(&cand));
    }

    #[test]
    fn election_rejects_non_ec_voters() {
        let (mut ledger, _, cand) = three_ec_world();
        let err = election_flow(&mut ledger, &cand, &[(cand.clone(), true)]).unwrap_err();
        assert!(matches!(err, ProtocolError::Contract(ContractError::Unauthorized { .. })));
    }
}
