// SPDX-License-Identifier: Apache-2.0

//! Append-only, hash-chained ledger that executes contract calls.
//!
//! One transaction per block. A block's hash is SHA-256 over the canonical
//! JSON (sorted keys, no whitespace) of its height, previous hash,
//! transactions and receipts. Block 0 carries the deployment call, so a
//! serialized chain is enough to rebuild the ledger from scratch.
//!
//! Reads go through [`Ledger::get_subjects`] and [`Ledger::get_nodes`] and
//! never produce blocks.

pub mod gas;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::contract::{
    Address, ContractCall, ContractError, ContractState, DeployArgs, Event, FunctionName, NodeRecord,
    SubjectRecord,
};
use crate::fcs::Digest;

pub use gas::{FunctionCost, GasTable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error("gas table has no entry for {function}")]
    IncompleteGasTable { function: FunctionName },
    #[error("gas table entry for {function} is invalid: {reason}")]
    InvalidGasTable { function: FunctionName, reason: String },
    #[error("bad nonce from {sender}: expected {expected}, got {got}")]
    BadNonce { sender: Address, expected: u64, got: u64 },
    #[error("unknown contract function {0:?}")]
    UnknownFunction(String),
    #[error("{0} is a read and cannot be submitted as a transaction")]
    NotATransaction(FunctionName),
    #[error("malformed call: {0}")]
    MalformedCall(String),
    #[error("deployment failed: {0}")]
    Deploy(ContractError),
    #[error("corrupt chain at block {height:?}: {reason}")]
    CorruptChain { height: Option<u64>, reason: String },
}

impl LedgerError {
    fn corrupt(height: impl Into<Option<u64>>, reason: impl Into<String>) -> Self {
        LedgerError::CorruptChain { height: height.into(), reason: reason.into() }
    }
}

/// Serializes through `serde_json::Value`, whose maps are ordered, so keys
/// come out sorted and without whitespace.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_value(value).expect("ledger types serialize").to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Transaction {
    pub sender: Address,
    pub nonce: u64,
    pub call: ContractCall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    Success,
    Reverted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GasReceipt {
    pub gas_used: u64,
    pub status: TxStatus,
    pub event: Option<Event>,
    /// Why the call reverted, when it did.
    pub error: Option<ContractError>,
}

impl GasReceipt {
    pub fn succeeded(&self) -> bool {
        self.status == TxStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Digest,
    pub transactions: Vec<Transaction>,
    pub receipts: Vec<GasReceipt>,
    pub block_hash: Digest,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BlockBody<'a> {
    height: u64,
    prev_hash: &'a Digest,
    transactions: &'a [Transaction],
    receipts: &'a [GasReceipt],
}

impl Block {
    fn seal(height: u64, prev_hash: Digest, tx: Transaction, receipt: GasReceipt) -> Block {
        let mut block = Block {
            height,
            prev_hash,
            transactions: vec![tx],
            receipts: vec![receipt],
            block_hash: genesis_parent(),
        };
        block.block_hash = block.compute_hash();
        block
    }

    pub fn compute_hash(&self) -> Digest {
        let body = BlockBody {
            height: self.height,
            prev_hash: &self.prev_hash,
            transactions: &self.transactions,
            receipts: &self.receipts,
        };
        Digest::of_bytes(canonical_json(&body).as_bytes())
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

fn genesis_parent() -> Digest {
    Digest::parse(Digest::ZERO).expect("zero digest is well-formed")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerConfig {
    pub creator: Address,
    pub code_length: usize,
    pub initial_ecs: Vec<NodeRecord>,
    pub gas_table: GasTable,
}

impl LedgerConfig {
    pub fn new(creator: Address, code_length: usize, initial_ecs: Vec<NodeRecord>) -> Self {
        LedgerConfig { creator, code_length, initial_ecs, gas_table: GasTable::default() }
    }
}

/// Single-writer ledger. `submit` takes `&mut self`; reads borrow the last
/// committed state.
#[derive(Debug, Clone)]
pub struct Ledger {
    blocks: Vec<Block>,
    state: ContractState,
    nonces: BTreeMap<Address, u64>,
    gas: GasTable,
}

impl Ledger {
    pub fn genesis(config: LedgerConfig) -> Result<Self, LedgerError> {
        config.gas_table.validate()?;
        let args = DeployArgs {
            code_length: config.code_length,
            initial_ecs: config.initial_ecs,
            gas_table: config.gas_table.clone(),
        };
        let (state, event) = ContractState::deploy(config.creator.clone(), &args).map_err(LedgerError::Deploy)?;
        let call = ContractCall::Deploy(args);
        let receipt = GasReceipt {
            gas_used: config.gas_table.charge(&call),
            status: TxStatus::Success,
            event: Some(event),
            error: None,
        };
        let tx = Transaction { sender: config.creator.clone(), nonce: 1, call };
        Ok(Ledger {
            blocks: vec![Block::seal(0, genesis_parent(), tx, receipt)],
            state,
            nonces: BTreeMap::from([(config.creator, 1)]),
            gas: config.gas_table,
        })
    }

    /// Executes `tx` and appends its block. Unauthorized or otherwise
    /// invalid calls are recorded with a reverted receipt; only a bad nonce
    /// is refused outright.
    pub fn submit(&mut self, tx: Transaction) -> Result<GasReceipt, LedgerError> {
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(LedgerError::BadNonce { sender: tx.sender, expected, got: tx.nonce });
        }
        let receipt = match self.state.execute(&tx.sender, &tx.call) {
            Ok(event) => GasReceipt {
                gas_used: self.gas.charge(&tx.call),
                status: TxStatus::Success,
                event: Some(event),
                error: None,
            },
            Err(error) => GasReceipt {
                gas_used: self.gas.revert_charge(tx.call.function()),
                status: TxStatus::Reverted,
                event: None,
                error: Some(error),
            },
        };
        self.nonces.insert(tx.sender.clone(), tx.nonce);
        let prev = self.head().block_hash.clone();
        let block = Block::seal(self.blocks.len() as u64, prev, tx, receipt.clone());
        self.blocks.push(block);
        Ok(receipt)
    }

    /// Submits `call` from `sender` with the next nonce.
    pub fn submit_call(&mut self, sender: &Address, call: ContractCall) -> Result<GasReceipt, LedgerError> {
        let nonce = self.next_nonce(sender);
        self.submit(Transaction { sender: sender.clone(), nonce, call })
    }

    /// Submits a call given by function name and JSON arguments.
    pub fn submit_raw(
        &mut self,
        sender: &Address,
        nonce: u64,
        function: &str,
        args: serde_json::Value,
    ) -> Result<GasReceipt, LedgerError> {
        let name: FunctionName = function
            .parse()
            .map_err(|_| LedgerError::UnknownFunction(function.to_string()))?;
        if name.is_read() {
            return Err(LedgerError::NotATransaction(name));
        }
        let call: ContractCall = serde_json::from_value(serde_json::json!({"function": function, "args": args}))
            .map_err(|e| LedgerError::MalformedCall(e.to_string()))?;
        self.submit(Transaction { sender: sender.clone(), nonce, call })
    }

    pub fn get_subjects(&self, caller: &Address, id: &str) -> Result<SubjectRecord, ContractError> {
        self.state.get_subjects(caller, id).cloned()
    }

    pub fn get_nodes(&self, caller: &Address, address: &Address) -> Result<NodeRecord, ContractError> {
        self.state.get_nodes(caller, address).cloned()
    }

    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0) + 1
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("ledger always holds genesis")
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn gas_table(&self) -> &GasTable {
        &self.gas
    }

    pub fn verify(&self) -> bool {
        verify_chain(&self.blocks)
    }

    /// One canonical JSON block per line.
    pub fn to_jsonl(&self) -> String {
        blocks_to_jsonl(&self.blocks)
    }

    /// Re-executes a serialized chain from genesis, checking every block
    /// reproduces exactly.
    pub fn replay(jsonl: &str) -> Result<Ledger, LedgerError> {
        let blocks = parse_jsonl(jsonl)?;
        if !verify_chain(&blocks) {
            return Err(LedgerError::corrupt(None, "hash chain does not verify"));
        }
        let genesis = &blocks[0];
        let tx = &genesis.transactions[0];
        let ContractCall::Deploy(args) = &tx.call else {
            return Err(LedgerError::corrupt(0, "first block is not a deployment"));
        };
        let config = LedgerConfig {
            creator: tx.sender.clone(),
            code_length: args.code_length,
            initial_ecs: args.initial_ecs.clone(),
            gas_table: args.gas_table.clone(),
        };
        let mut ledger = Ledger::genesis(config).map_err(|e| LedgerError::corrupt(0, e.to_string()))?;
        if ledger.blocks[0] != *genesis {
            return Err(LedgerError::corrupt(0, "genesis does not reproduce"));
        }
        for block in &blocks[1..] {
            let tx = block.transactions[0].clone();
            ledger
                .submit(tx)
                .map_err(|e| LedgerError::corrupt(block.height, e.to_string()))?;
            if ledger.head() != block {
                return Err(LedgerError::corrupt(block.height, "re-execution diverges from the log"));
            }
        }
        Ok(ledger)
    }
}

pub fn blocks_to_jsonl(blocks: &[Block]) -> String {
    blocks.iter().map(|b| b.to_canonical_json() + "\n").collect()
}

/// Checks heights, hash links and every block hash.
pub fn verify_chain(blocks: &[Block]) -> bool {
    let Some(first) = blocks.first() else {
        return false;
    };
    if first.prev_hash != genesis_parent() {
        return false;
    }
    blocks.iter().enumerate().all(|(i, b)| {
        b.height == i as u64
            && b.transactions.len() == 1
            && b.receipts.len() == 1
            && (i == 0 || b.prev_hash == blocks[i - 1].block_hash)
            && b.compute_hash() == b.block_hash
    })
}

/// Parses a JSON-lines chain. Every line must already be in canonical
/// form, so any byte-level edit either fails here or changes a hash.
pub fn parse_jsonl(text: &str) -> Result<Vec<Block>, LedgerError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(LedgerError::corrupt(None, "empty log"));
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let block: Block = serde_json::from_str(line)
                .map_err(|e| LedgerError::corrupt(i as u64, format!("unparseable block: {e}")))?;
            if block.to_canonical_json() != line {
                return Err(LedgerError::corrupt(i as u64, "block is not canonically serialized"));
            }
            Ok(block)
        })
        .collect()
}

pub fn verify_jsonl(text: &str) -> bool {
    parse_jsonl(text).is_ok_and(|blocks| verify_chain(&blocks))
}

pub fn replay_state(jsonl: &str) -> Result<ContractState, LedgerError> {
    Ledger::replay(jsonl).map(|l| l.state)
}
