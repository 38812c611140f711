// SPDX-License-Identifier: Apache-2.0

//! Python bindings: codes, commitments, the ledger and the batch tools.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use bioledger::contract::{Address, NodeRecord};
use bioledger::ecc::{self, Witness};
use bioledger::fcs::{self, FeatureVector};
use bioledger::ledger::{self, LedgerConfig};
use bioledger::report::GasReport;
use bioledger::scenario::{self, Scenario};
use bioledger::synthbio::{self, BiometricTemplate, IdentityExtractor, NoiseModel};
use bioledger::{protocol, sweep, Bits};

create_exception!(pybioledger, BioledgerError, PyException);

fn fail(e: impl std::fmt::Display) -> PyErr {
    BioledgerError::new_err(e.to_string())
}

fn bits(s: &str) -> PyResult<Bits> {
    s.parse().map_err(fail)
}

fn rng(seed: Option<u64>) -> Box<dyn RngCore> {
    match seed {
        Some(s) => Box::new(ChaCha20Rng::seed_from_u64(s)),
        None => Box::new(OsRng),
    }
}

/// Hands a serializable value to Python as plain dicts and lists.
fn to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(fail)?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "LinearCode", module = "pybioledger", frozen)]
#[derive(Clone)]
struct PyLinearCode(ecc::LinearCode);

#[pymethods]
impl PyLinearCode {
    #[staticmethod]
    fn hamming(r: usize) -> PyResult<Self> {
        ecc::LinearCode::hamming(r).map(Self).map_err(fail)
    }

    #[staticmethod]
    fn repetition(n: usize) -> PyResult<Self> {
        ecc::LinearCode::repetition(n).map(Self).map_err(fail)
    }

    /// Rows of a k x n generator matrix as bitstrings.
    #[staticmethod]
    fn from_generator(rows: Vec<String>) -> PyResult<Self> {
        let rows = rows.iter().map(|r| bits(r)).collect::<PyResult<Vec<_>>>()?;
        ecc::LinearCode::from_generator(&rows).map(Self).map_err(fail)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn t(&self) -> usize {
        self.0.t()
    }

    #[getter]
    fn d_min(&self) -> usize {
        self.0.d_min()
    }

    #[getter]
    fn family(&self) -> String {
        serde_json::to_value(self.0.family()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    fn is_perfect(&self) -> bool {
        self.0.is_perfect()
    }

    fn encode(&self, witness: &str) -> PyResult<String> {
        Ok(self.0.encode(&Witness::new(bits(witness)?)).map_err(fail)?.to_string())
    }

    fn decode(&self, word: &str) -> PyResult<String> {
        Ok(self.0.decode(&bits(word)?).map_err(fail)?.to_string())
    }

    fn generator(&self) -> Vec<String> {
        self.0.generator().iter().map(Bits::to_string).collect()
    }

    fn description(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.0.description())
    }

    fn __repr__(&self) -> String {
        format!("LinearCode({}, n={}, k={}, t={})", self.family(), self.0.n(), self.0.k(), self.0.t())
    }
}

#[pyclass(name = "Commitment", module = "pybioledger", frozen)]
#[derive(Clone)]
struct PyCommitment(fcs::Commitment);

#[pymethods]
impl PyCommitment {
    #[getter]
    fn digest(&self) -> String {
        self.0.digest.to_string()
    }

    #[getter]
    fn offset(&self) -> String {
        self.0.offset.to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(fail)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(fail)
    }

    fn __repr__(&self) -> String {
        format!("Commitment(digest={}..., offset={})", &self.0.digest.as_str()[..12], self.0.offset)
    }
}

/// Commits to `x`. Without a seed the witness comes from the OS RNG.
#[pyfunction]
#[pyo3(signature = (code, x, seed=None))]
fn commit(code: &PyLinearCode, x: &str, seed: Option<u64>) -> PyResult<PyCommitment> {
    let x = FeatureVector::new(bits(x)?);
    fcs::commit(&code.0, &x, &mut *rng(seed)).map(PyCommitment).map_err(fail)
}

#[pyfunction]
fn open(code: &PyLinearCode, commitment: &PyCommitment, reading: &str) -> PyResult<bool> {
    fcs::open(&code.0, &commitment.0, &FeatureVector::new(bits(reading)?)).map_err(fail)
}

/// `"matched"`, `"digest-mismatch"` or `"decoding-failure"`.
#[pyfunction]
fn open_detailed(py: Python<'_>, code: &PyLinearCode, commitment: &PyCommitment, reading: &str) -> PyResult<PyObject> {
    let o = fcs::open_detailed(&code.0, &commitment.0, &FeatureVector::new(bits(reading)?)).map_err(fail)?;
    to_py(py, &o)
}

#[pyfunction]
fn analytic_error_rates(py: Python<'_>, code: &PyLinearCode, p: f64) -> PyResult<PyObject> {
    let noise = NoiseModel::new(p).map_err(fail)?;
    to_py(py, &synthbio::analytic_error_rates(&code.0, &noise))
}

#[pyclass(name = "Ledger", module = "pybioledger")]
struct PyLedger(ledger::Ledger);

#[pymethods]
impl PyLedger {
    /// Deploys the contract with the named initial enrollment centers.
    #[new]
    #[pyo3(signature = (code_length, ecs, creator="creator"))]
    fn new(code_length: usize, ecs: Vec<String>, creator: &str) -> PyResult<Self> {
        let records = ecs.iter().enumerate().map(|(i, n)| NodeRecord::enrollment(i as u64 + 1, n)).collect();
        ledger::Ledger::genesis(LedgerConfig::new(Address::from_name(creator), code_length, records))
            .map(Self)
            .map_err(fail)
    }

    /// Rebuilds a ledger by re-executing a JSONL log.
    #[staticmethod]
    fn replay(jsonl: &str) -> PyResult<Self> {
        ledger::Ledger::replay(jsonl).map(Self).map_err(fail)
    }

    fn register_node(&mut self, py: Python<'_>, ec: &str, name: &str) -> PyResult<PyObject> {
        let id = self.0.state().nodes.len() as u64 + 1;
        let record = NodeRecord::authentication(id, name);
        let event = protocol::register_node_flow(&mut self.0, &Address::from_name(ec), record).map_err(fail)?;
        to_py(py, &event)
    }

    #[pyo3(signature = (code, ec, subject, templates, seed=None))]
    fn enroll(
        &mut self,
        py: Python<'_>,
        code: &PyLinearCode,
        ec: &str,
        subject: &str,
        templates: Vec<String>,
        seed: Option<u64>,
    ) -> PyResult<PyObject> {
        let bio = templates.iter().map(|t| bits(t).map(FeatureVector::new)).collect::<PyResult<Vec<_>>>()?;
        let event = protocol::enroll_user(&mut self.0, &code.0, &Address::from_name(ec), subject, &bio, &mut *rng(seed))
            .map_err(fail)?;
        to_py(py, &event)
    }

    #[pyo3(signature = (code, ac, subject, modality, reading, log=false))]
    fn authenticate(
        &mut self,
        py: Python<'_>,
        code: &PyLinearCode,
        ac: &str,
        subject: &str,
        modality: usize,
        reading: &str,
        log: bool,
    ) -> PyResult<PyObject> {
        let acquisition = BiometricTemplate { bits: bits(reading)?, modality };
        let out = protocol::authenticate_user(
            &mut self.0,
            &code.0,
            &Address::from_name(ac),
            subject,
            modality,
            &acquisition,
            &IdentityExtractor,
            log,
        )
        .map_err(fail)?;
        to_py(py, &out)
    }

    fn revoke(&mut self, py: Python<'_>, ec: &str, subject: &str) -> PyResult<PyObject> {
        let event = protocol::revoke_user(&mut self.0, &Address::from_name(ec), subject).map_err(fail)?;
        to_py(py, &event)
    }

    /// Votes are `(ec_name, yes)` pairs; returns whether the candidate was elevated.
    fn elect(&mut self, candidate: &str, votes: Vec<(String, bool)>) -> PyResult<bool> {
        let votes: Vec<(Address, bool)> = votes.iter().map(|(v, b)| (Address::from_name(v), *b)).collect();
        protocol::election_flow(&mut self.0, &Address::from_name(candidate), &votes).map_err(fail)
    }

    fn get_subject(&self, py: Python<'_>, caller: &str, subject: &str) -> PyResult<PyObject> {
        let record = self.0.get_subjects(&Address::from_name(caller), subject).map_err(fail)?;
        to_py(py, &record)
    }

    fn is_ec(&self, name: &str) -> bool {
        self.0.state().is_ec(&Address::from_name(name))
    }

    fn state(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, self.0.state())
    }

    fn verify(&self) -> bool {
        self.0.verify()
    }

    fn to_jsonl(&self) -> String {
        self.0.to_jsonl()
    }

    fn __len__(&self) -> usize {
        self.0.blocks().len()
    }
}

/// Runs a scenario document (the bundled demo when omitted) and returns
/// `(ledger_jsonl, report)`.
#[pyfunction]
#[pyo3(signature = (scenario_json=None))]
fn run_scenario(py: Python<'_>, scenario_json: Option<&str>) -> PyResult<(String, PyObject)> {
    let s = match scenario_json {
        Some(text) => Scenario::from_json(text).map_err(fail)?,
        None => Scenario::demo(),
    };
    let run = scenario::run_scenario(&s).map_err(fail)?;
    Ok((run.jsonl(), to_py(py, &run.report)?))
}

#[pyfunction]
fn demo_scenario() -> &'static str {
    scenario::DEMO_JSON
}

/// FAR/FRR sweep as CSV text.
#[pyfunction]
#[pyo3(signature = (codes, p_grid, trials=10_000, seed=0))]
fn far_frr_sweep(codes: Vec<PyLinearCode>, p_grid: Vec<f64>, trials: usize, seed: u64) -> PyResult<String> {
    let codes: Vec<_> = codes.into_iter().map(|c| c.0).collect();
    let rows = sweep::far_frr_sweep(&codes, &p_grid, trials, seed).map_err(fail)?;
    Ok(sweep::to_csv(&rows))
}

#[pyfunction]
fn verify_jsonl(jsonl: &str) -> bool {
    ledger::verify_jsonl(jsonl)
}

/// Gas report of a JSONL ledger as CSV text; raises on a corrupt chain.
#[pyfunction]
fn gas_report(jsonl: &str) -> PyResult<String> {
    Ok(GasReport::from_jsonl(jsonl).map_err(fail)?.to_csv())
}

#[pymodule]
fn pybioledger(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BioledgerError", m.py().get_type_bound::<BioledgerError>())?;
    m.add_class::<PyLinearCode>()?;
    m.add_class::<PyCommitment>()?;
    m.add_class::<PyLedger>()?;
    m.add_function(wrap_pyfunction!(commit, m)?)?;
    m.add_function(wrap_pyfunction!(open, m)?)?;
    m.add_function(wrap_pyfunction!(open_detailed, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_error_rates, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(demo_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(far_frr_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(verify_jsonl, m)?)?;
    m.add_function(wrap_pyfunction!(gas_report, m)?)?;
    Ok(())
}
