// SPDX-License-Identifier: Apache-2.0

//! Gas schedule. Each write is charged
//! `base + per_slot * slots + per_byte * payload_bytes`, where the payload
//! is the canonical JSON of the call arguments. Reads are free.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{canonical_json, LedgerError};
use crate::contract::{ContractCall, FunctionName};

pub const TX_BASE: u64 = 21_000;
pub const CONTRACT_CREATION: u64 = 32_000;
pub const NEW_SLOT: u64 = 20_000;
pub const UPDATE_SLOT: u64 = 5_000;
pub const PER_BYTE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FunctionCost {
    pub base: u64,
    pub per_slot: u64,
    pub per_byte: u64,
}

impl FunctionCost {
    pub const FREE: FunctionCost = FunctionCost { base: 0, per_slot: 0, per_byte: 0 };

    pub fn is_free(&self) -> bool {
        *self == Self::FREE
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GasTable(BTreeMap<FunctionName, FunctionCost>);

impl Default for GasTable {
    fn default() -> Self {
        use FunctionName::*;
        let cost = |base, per_slot| FunctionCost { base, per_slot, per_byte: PER_BYTE };
        GasTable(BTreeMap::from([
            (Deploy, cost(TX_BASE + CONTRACT_CREATION, NEW_SLOT)),
            (SetSubjects, cost(TX_BASE, NEW_SLOT)),
            (UpdateSubjects, cost(TX_BASE, UPDATE_SLOT)),
            (DelSubjects, cost(TX_BASE, UPDATE_SLOT)),
            (SetNodes, cost(TX_BASE, NEW_SLOT)),
            (UpdateNodes, cost(TX_BASE, UPDATE_SLOT)),
            (DelNodes, cost(TX_BASE, UPDATE_SLOT)),
            (LogAuthentication, cost(TX_BASE, NEW_SLOT)),
        ]))
    }
}

impl GasTable {
    pub fn new(entries: BTreeMap<FunctionName, FunctionCost>) -> Self {
        GasTable(entries)
    }

    pub fn entries(&self) -> &BTreeMap<FunctionName, FunctionCost> {
        &self.0
    }

    pub fn remove(&mut self, function: FunctionName) -> Option<FunctionCost> {
        self.0.remove(&function)
    }

    pub fn insert(&mut self, function: FunctionName, cost: FunctionCost) {
        self.0.insert(function, cost);
    }

    /// Every write needs an entry with a positive base; reads, if listed,
    /// must be free.
    pub fn validate(&self) -> Result<(), LedgerError> {
        for f in FunctionName::ALL {
            match (f.is_read(), self.0.get(&f)) {
                (false, None) => return Err(LedgerError::IncompleteGasTable { function: f }),
                (false, Some(c)) if c.base == 0 => {
                    return Err(LedgerError::InvalidGasTable { function: f, reason: "zero base cost".into() })
                }
                (true, Some(c)) if !c.is_free() => {
                    return Err(LedgerError::InvalidGasTable { function: f, reason: "reads must be free".into() })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Schedule entry for a function given by name.
    pub fn gas_cost(&self, function: &str) -> Result<FunctionCost, LedgerError> {
        let f: FunctionName = function
            .parse()
            .map_err(|_| LedgerError::UnknownFunction(function.to_string()))?;
        Ok(self.schedule(f))
    }

    pub fn schedule(&self, function: FunctionName) -> FunctionCost {
        if function.is_read() {
            return FunctionCost::FREE;
        }
        self.0.get(&function).copied().unwrap_or_default()
    }

    /// Gas for a successful call.
    pub fn charge(&self, call: &ContractCall) -> u64 {
        let cost = self.schedule(call.function());
        cost.base + cost.per_slot * call.storage_slots() + cost.per_byte * payload_bytes(call)
    }

    /// Gas for a reverted call: the base fee only.
    pub fn revert_charge(&self, function: FunctionName) -> u64 {
        self.schedule(function).base
    }
}

/// Size of the canonical JSON encoding of the call arguments.
pub fn payload_bytes(call: &ContractCall) -> u64 {
    let value = serde_json::to_value(call).expect("contract calls serialize");
    canonical_json(&value["args"]).len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_is_complete() {
        GasTable::default().validate().unwrap();
    }

    #[test]
    fn reads_are_free_and_writes_are_not() {
        let table = GasTable::default();
        assert!(table.gas_cost("getSubjects").unwrap().is_free());
        assert!(table.gas_cost("getNodes").unwrap().is_free());
        for f in FunctionName::ALL.into_iter().filter(|f| !f.is_read()) {
            assert!(table.gas_cost(f.as_str()).unwrap().base > 0, "{f}");
        }
        assert_eq!(
            table.gas_cost("setSubjects").unwrap(),
            FunctionCost { base: 21_000, per_slot: 20_000, per_byte: 16 }
        );
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(
            GasTable::default().gas_cost("frobnicate"),
            Err(LedgerError::UnknownFunction(name)) if name == "frobnicate"
        ));
    }

    #[test]
    fn missing_and_invalid_entries() {
        let mut table = GasTable::default();
        table.remove(FunctionName::DelNodes);
        assert!(matches!(
            table.validate(),
            Err(LedgerError::IncompleteGasTable { function: FunctionName::DelNodes })
        ));
        let mut table = GasTable::default();
        table.insert(FunctionName::GetNodes, FunctionCost { base: 1, per_slot: 0, per_byte: 0 });
        assert!(matches!(table.validate(), Err(LedgerError::InvalidGasTable { .. })));
    }

    #[test]
    fn charge_counts_slots_and_bytes() {
        let call = ContractCall::DelSubjects { id: "u1".into() };
        // args serialize as {"id":"u1"}: 11 bytes
        assert_eq!(payload_bytes(&call), 11);
        assert_eq!(GasTable::default().charge(&call), 21_000 + 5_000 + 16 * 11);
    }
}
