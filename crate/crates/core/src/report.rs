// SPDX-License-Identifier: Apache-2.0

//! Per-function gas accounting over a ledger file.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::contract::FunctionName;
use crate::ledger::{parse_jsonl, verify_chain, Block, FunctionCost, GasTable, LedgerError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GasRow {
    pub function: FunctionName,
    pub read: bool,
    pub calls: u64,
    pub reverted: u64,
    pub total_gas: u64,
    pub min_gas: Option<u64>,
    pub max_gas: Option<u64>,
    pub schedule: FunctionCost,
}

impl GasRow {
    pub fn mean_gas(&self) -> Option<f64> {
        (self.calls > 0).then(|| self.total_gas as f64 / self.calls as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasReport {
    pub rows: Vec<GasRow>,
}

impl GasReport {
    /// Parses and verifies a JSONL ledger first; a broken chain is
    /// `CorruptChain`.
    pub fn from_jsonl(text: &str) -> Result<GasReport, LedgerError> {
        let blocks = parse_jsonl(text)?;
        if !verify_chain(&blocks) {
            return Err(LedgerError::CorruptChain { height: None, reason: "hash chain does not verify".into() });
        }
        Ok(Self::from_blocks(&blocks))
    }

    /// Reads never enter the ledger, so their rows list zero calls at zero gas.
    pub fn from_blocks(blocks: &[Block]) -> GasReport {
        let table: GasTable = match &blocks.first().map(|b| &b.transactions[0].call) {
            Some(crate::contract::ContractCall::Deploy(args)) => args.gas_table.clone(),
            _ => GasTable::default(),
        };
        let mut rows: Vec<GasRow> = FunctionName::ALL
            .into_iter()
            .map(|f| GasRow {
                function: f,
                read: f.is_read(),
                calls: 0,
                reverted: 0,
                total_gas: 0,
                min_gas: None,
                max_gas: None,
                schedule: table.schedule(f),
            })
            .collect();
        for block in blocks {
            for (tx, receipt) in block.transactions.iter().zip(&block.receipts) {
                let row = rows.iter_mut().find(|r| r.function == tx.call.function()).expect("every function has a row");
                row.calls += 1;
                row.reverted += (!receipt.succeeded()) as u64;
                row.total_gas += receipt.gas_used;
                row.min_gas = Some(row.min_gas.map_or(receipt.gas_used, |m| m.min(receipt.gas_used)));
                row.max_gas = Some(row.max_gas.map_or(receipt.gas_used, |m| m.max(receipt.gas_used)));
            }
        }
        GasReport { rows }
    }

    pub fn row(&self, function: FunctionName) -> &GasRow {
        self.rows.iter().find(|r| r.function == function).expect("every function has a row")
    }

    /// Reads cost nothing, every recorded write cost something, and the
    /// contract was deployed exactly once.
    pub fn check_dichotomy(&self) -> Result<(), String> {
        for row in &self.rows {
            if row.read {
                if row.total_gas != 0 || !row.schedule.is_free() {
                    return Err(format!("{} is a read but costs gas", row.function));
                }
            } else {
                if row.schedule.base == 0 {
                    return Err(format!("{} has a zero base cost", row.function));
                }
                if row.min_gas == Some(0) {
                    return Err(format!("{} was executed for free", row.function));
                }
            }
        }
        match self.row(FunctionName::Deploy).calls {
            1 => Ok(()),
            n => Err(format!("deploy appears {n} times")),
        }
    }

    pub fn to_text(&self) -> String {
        let header = ["function", "kind", "calls", "reverted", "total", "min", "max", "mean"];
        let cells: Vec<[String; 8]> = self
            .rows
            .iter()
            .map(|r| {
                let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
                [
                    r.function.to_string(),
                    if r.read { "read" } else { "write" }.to_string(),
                    r.calls.to_string(),
                    r.reverted.to_string(),
                    r.total_gas.to_string(),
                    opt(r.min_gas),
                    opt(r.max_gas),
                    r.mean_gas().map_or("-".to_string(), |m| format!("{m:.1}")),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| cells.iter().map(|c| c[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let mut line = |fields: &[&str]| {
            let mut l = String::new();
            for (i, f) in fields.iter().enumerate() {
                if i == 0 {
                    let _ = write!(l, "{f:<w$}", w = widths[i]);
                } else {
                    let _ = write!(l, "  {f:>w$}", w = widths[i]);
                }
            }
            out.push_str(l.trim_end());
            out.push('\n');
        };
        line(&header);
        for c in &cells {
            line(&c.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let total: u64 = self.rows.iter().map(|r| r.total_gas).sum();
        out + &format!("total gas: {total}\n")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["function", "kind", "calls", "reverted", "total_gas", "min_gas", "max_gas", "base", "per_slot", "per_byte"])
            .expect("in-memory write");
        for r in &self.rows {
            let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
            w.write_record([
                r.function.to_string(),
                if r.read { "read" } else { "write" }.to_string(),
                r.calls.to_string(),
                r.reverted.to_string(),
                r.total_gas.to_string(),
                opt(r.min_gas),
                opt(r.max_gas),
                r.schedule.base.to_string(),
                r.schedule.per_slot.to_string(),
                r.schedule.per_byte.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}
