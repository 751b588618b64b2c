//! JSON instance files and report files.
//!
//! Instance layout:
//!
//! ```json
//! {
//!   "states": ["s0", "s1"],
//!   "actions": {"s0": ["a", "b"], "s1": ["back"]},
//!   "transitions": {"s0": {"a": {"s1": 1.0}, "b": {"s1": 1.0}}, "s1": {"back": {"s0": 1.0}}},
//!   "rewards": {"s0": {"a": 1.0, "b": 0.5}, "s1": {"back": 0.0}}
//! }
//! ```
//!
//! Omitted target states have probability 0. State and action order follow
//! the `"states"` array and each `"actions"` array.
//!
//! Every floating-point number written by this module carries 17
//! significant digits, so values read back are bit-identical.

use std::collections::{BTreeMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mdp::{MdpInstance, Policy};
use crate::thresholds::{Degeneracy, ErgodicBound, OracleEstimate, OracleOptions, ExhaustiveBound};
use crate::Settings;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    states: Vec<String>,
    actions: BTreeMap<String, Vec<String>>,
    transitions: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    rewards: BTreeMap<String, BTreeMap<String, f64>>,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates an instance document.
pub fn parse_mdp(text: &[u8]) -> Result<MdpInstance> {
    let file: InstanceFile = serde_json::from_slice(text).map_err(parse_error)?;
    let mut seen = HashSet::new();
    for s in &file.states {
        if !seen.insert(s.as_str()) {
            return Err(Error::DuplicateLabel(s.clone()));
        }
    }
    let known = |label: &String| -> Result<()> {
        if seen.contains(label.as_str()) {
            Ok(())
        } else {
            Err(Error::UnknownLabel(label.clone()))
        }
    };
    for key in file.actions.keys().chain(file.transitions.keys()).chain(file.rewards.keys()) {
        known(key)?;
    }

    let n = file.states.len();
    let index = |label: &str| file.states.iter().position(|s| s == label);
    let mut action_labels = Vec::with_capacity(n);
    let mut transitions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for state in &file.states {
        let actions = file.actions.get(state).cloned().unwrap_or_default();
        let state_rows = file.transitions.get(state);
        let state_rewards = file.rewards.get(state);
        for table in [state_rows.map(|m| m.keys().collect::<Vec<_>>()), state_rewards.map(|m| m.keys().collect())]
            .into_iter()
            .flatten()
        {
            if let Some(stray) = table.into_iter().find(|a| !actions.contains(a)) {
                return Err(Error::UnknownLabel(format!("{state}/{stray}")));
            }
        }
        let mut rows = Vec::with_capacity(actions.len());
        let mut rs = Vec::with_capacity(actions.len());
        for action in &actions {
            let mut row = vec![0.0; n];
            if let Some(entries) = state_rows.and_then(|m| m.get(action)) {
                for (target, &p) in entries {
                    let y = index(target).ok_or_else(|| Error::UnknownLabel(target.clone()))?;
                    row[y] = p;
                }
            }
            rows.push(row);
            let r = state_rewards
                .and_then(|m| m.get(action))
                .copied()
                .ok_or_else(|| Error::Shape(format!("missing reward for state `{state}`, action `{action}`")))?;
            rs.push(r);
        }
        action_labels.push(actions);
        transitions.push(rows);
        rewards.push(rs);
    }
    MdpInstance::new(file.states, action_labels, transitions, rewards)
}

/// The instance as a JSON value, with zero probabilities omitted.
pub fn instance_value(mdp: &MdpInstance) -> Value {
    let mut actions = Map::new();
    let mut transitions = Map::new();
    let mut rewards = Map::new();
    for x in 0..mdp.n_states() {
        let label = mdp.state_label(x).to_string();
        actions.insert(label.clone(), Value::from(mdp.action_labels(x).to_vec()));
        let mut rows = Map::new();
        let mut rs = Map::new();
        for (a, action) in mdp.action_labels(x).iter().enumerate() {
            let row: Map<String, Value> = mdp
                .transition(x, a)
                .iter()
                .enumerate()
                .filter(|(_, p)| **p != 0.0)
                .map(|(y, p)| (mdp.state_label(y).to_string(), Value::from(*p)))
                .collect();
            rows.insert(action.clone(), Value::Object(row));
            rs.insert(action.clone(), Value::from(mdp.reward(x, a)));
        }
        transitions.insert(label.clone(), Value::Object(rows));
        rewards.insert(label, Value::Object(rs));
    }
    let mut doc = Map::new();
    doc.insert("states".into(), Value::from(mdp.state_labels().to_vec()));
    doc.insert("actions".into(), Value::Object(actions));
    doc.insert("transitions".into(), Value::Object(transitions));
    doc.insert("rewards".into(), Value::Object(rewards));
    Value::Object(doc)
}

pub fn serialize_mdp(mdp: &MdpInstance) -> String {
    to_json_string(&instance_value(mdp))
}

/// SHA-256 of the compact canonical serialisation of an instance.
pub fn instance_digest(mdp: &MdpInstance) -> String {
    let mut bytes = Vec::new();
    let mut ser = Serializer::with_formatter(&mut bytes, SignificantDigits::compact());
    instance_value(mdp)
        .serialize(&mut ser)
        .expect("serialising to memory cannot fail");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes floats as `{:.16e}`: 17 significant digits, exact round trip.
/// Layout is delegated to serde_json's pretty or compact formatter.
pub struct SignificantDigits {
    pretty: Option<PrettyFormatter<'static>>,
}

impl SignificantDigits {
    pub fn pretty() -> Self {
        Self {
            pretty: Some(PrettyFormatter::new()),
        }
    }

    pub fn compact() -> Self {
        Self { pretty: None }
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {$(
        fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            match &mut self.pretty {
                Some(p) => p.$name(writer $(, $arg)*),
                None => serde_json::ser::CompactFormatter.$name(writer $(, $arg)*),
            }
        }
    )*};
}

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// Pretty JSON with 17-significant-digit floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut bytes = Vec::new();
    let mut ser = Serializer::with_formatter(&mut bytes, SignificantDigits::pretty());
    value.serialize(&mut ser).expect("serialising to memory cannot fail");
    String::from_utf8(bytes).expect("serde_json emits UTF-8")
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InstanceSummary {
    pub digest: String,
    pub states: usize,
    pub state_actions: usize,
    pub policies: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Tolerances {
    pub tie_tolerance: f64,
    pub policy_cap: String,
    pub oracle_grid_points: Option<usize>,
    pub oracle_refine_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WitnessEntry {
    pub state: String,
    pub policy: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PolicyRow {
    pub policy: Vec<String>,
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub span_bias: f64,
    pub gain_optimal: bool,
    pub bias_optimal: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The machine-readable output of every CLI analysis.
///
/// All threshold fields are always present; those an invocation did not
/// compute are `null`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReportFile {
    pub instance: InstanceSummary,
    pub tolerances: Tolerances,
    pub ergodic: Option<bool>,
    pub theorem1_bound: Option<f64>,
    pub theorem1_raw: Option<f64>,
    pub theorem1_degenerate: Option<&'static str>,
    pub theorem1_zero_denominator_pairs: Option<usize>,
    pub witnesses: Vec<WitnessEntry>,
    pub theorem2_bound: Option<f64>,
    pub theorem2_raw: Option<f64>,
    pub theorem2_degenerate: Option<&'static str>,
    pub delta_g: Option<f64>,
    pub worst_diameter: Option<f64>,
    pub reward_span: Option<f64>,
    pub oracle_estimate: Option<f64>,
    pub oracle_bracket: Option<[f64; 2]>,
    pub oracle_grid_resolution: Option<f64>,
    pub oracle_witness: Option<Vec<String>>,
    pub g_star: Option<Vec<f64>>,
    pub h_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<PolicyRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckEntry>>,
    pub error: Option<String>,
    pub timing_ms: f64,
}

fn degeneracy_name(d: Option<Degeneracy>) -> Option<&'static str> {
    d.map(|d| match d {
        Degeneracy::NoSuboptimalPair => "no_suboptimal_pair",
        Degeneracy::Unconstrained => "unconstrained",
    })
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Action labels of a policy, in state order.
pub fn policy_labels(mdp: &MdpInstance, policy: &Policy) -> Vec<String> {
    policy
        .choices()
        .iter()
        .enumerate()
        .map(|(x, &a)| mdp.action_labels(x)[a].clone())
        .collect()
}

impl ReportFile {
    pub fn new(mdp: &MdpInstance, settings: &Settings) -> Self {
        Self {
            instance: InstanceSummary {
                digest: instance_digest(mdp),
                states: mdp.n_states(),
                state_actions: mdp.state_actions().count(),
                policies: mdp.policy_count().to_string(),
            },
            tolerances: Tolerances {
                tie_tolerance: settings.tie_tolerance,
                policy_cap: settings.policy_cap.to_string(),
                oracle_grid_points: None,
                oracle_refine_tol: None,
            },
            ergodic: None,
            theorem1_bound: None,
            theorem1_raw: None,
            theorem1_degenerate: None,
            theorem1_zero_denominator_pairs: None,
            witnesses: Vec::new(),
            theorem2_bound: None,
            theorem2_raw: None,
            theorem2_degenerate: None,
            delta_g: None,
            worst_diameter: None,
            reward_span: None,
            oracle_estimate: None,
            oracle_bracket: None,
            oracle_grid_resolution: None,
            oracle_witness: None,
            g_star: None,
            h_star: None,
            policies: None,
            checks: None,
            error: None,
            timing_ms: 0.0,
        }
    }

    pub fn set_exhaustive_bound(&mut self, mdp: &MdpInstance, bound: &ExhaustiveBound) {
        self.theorem1_bound = Some(bound.bound.value);
        self.theorem1_raw = finite(bound.bound.raw);
        self.theorem1_degenerate = degeneracy_name(bound.bound.degenerate);
        self.theorem1_zero_denominator_pairs = Some(bound.zero_denominator_pairs);
        self.witnesses = bound
            .witnesses
            .iter()
            .map(|(x, p)| WitnessEntry {
                state: mdp.state_label(*x).to_string(),
                policy: policy_labels(mdp, p),
            })
            .collect();
    }

    pub fn set_ergodic_bound(&mut self, bound: &ErgodicBound) {
        self.theorem2_bound = Some(bound.bound.value);
        self.theorem2_raw = finite(bound.bound.raw);
        self.theorem2_degenerate = degeneracy_name(bound.bound.degenerate);
        self.delta_g = bound.delta_g;
        self.worst_diameter = Some(bound.worst_diameter);
        self.reward_span = Some(bound.reward_span);
    }

    pub fn set_oracle(&mut self, mdp: &MdpInstance, options: OracleOptions, oracle: &OracleEstimate) {
        self.tolerances.oracle_grid_points = Some(options.grid_points);
        self.tolerances.oracle_refine_tol = Some(options.refine_tol);
        self.oracle_estimate = Some(oracle.estimate);
        self.oracle_bracket = Some([oracle.bracket.0, oracle.bracket.1]);
        self.oracle_grid_resolution = Some(oracle.grid_resolution);
        self.oracle_witness = oracle.witness.as_ref().map(|p| policy_labels(mdp, p));
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1, two_state_ergodic};

    #[test]
    fn parses_minimal_document() {
        let doc = br#"{"states":["x"],"actions":{"x":["stay"]},
            "transitions":{"x":{"stay":{"x":1}}},"rewards":{"x":{"stay":2.5}}}"#;
        let m = parse_mdp(doc).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.reward(0, 0), 2.5);
    }

    #[test]
    fn reports_bad_row_by_label() {
        let doc = br#"{"states":["x","y"],"actions":{"x":["go"],"y":["go"]},
            "transitions":{"x":{"go":{"x":0.5,"y":0.48}},"y":{"go":{"y":1}}},
            "rewards":{"x":{"go":0},"y":{"go":0}}}"#;
        match parse_mdp(doc).unwrap_err() {
            Error::RowSum { state, action, .. } => {
                assert_eq!(state, "x");
                assert_eq!(action, "go");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_mdp(b"{\n  \"states\": [\"x\",\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn unknown_labels_are_rejected() {
        let doc = br#"{"states":["x"],"actions":{"x":["stay"]},
            "transitions":{"x":{"stay":{"z":1}}},"rewards":{"x":{"stay":0}}}"#;
        assert_eq!(parse_mdp(doc).unwrap_err(), Error::UnknownLabel("z".into()));
        let doc = br#"{"states":["x"],"actions":{"x":["stay"]},
            "transitions":{"x":{"stay":{"x":1}}},"rewards":{"x":{"jump":0}}}"#;
        assert!(matches!(parse_mdp(doc).unwrap_err(), Error::UnknownLabel(_)));
    }

    #[test]
    fn missing_actions_mean_empty_action_set() {
        let doc = br#"{"states":["x"],"actions":{},"transitions":{},"rewards":{}}"#;
        assert_eq!(parse_mdp(doc).unwrap_err(), Error::EmptyActionSet("x".into()));
    }

    #[test]
    fn shipped_two_branch_fixture_matches_builder() {
        let text = include_bytes!("../fixtures/figure1.json");
        assert_eq!(parse_mdp(text).unwrap(), figure1(0.1, 0.5).unwrap());
        let text = include_bytes!("../fixtures/two_state.json");
        assert_eq!(parse_mdp(text).unwrap(), two_state_ergodic());
    }

    #[test]
    fn floats_have_seventeen_significant_digits() {
        let s = to_json_string(&[0.8f64, 1.0, 1e-300]);
        assert!(s.contains("8.0000000000000004e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.8, 1.0, 1e-300]);
    }

    #[test]
    fn report_has_every_threshold_field() {
        let m = two_state_ergodic();
        let report = ReportFile::new(&m, &Settings::default());
        let v: Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in [
            "theorem1_bound",
            "theorem2_bound",
            "delta_g",
            "worst_diameter",
            "oracle_estimate",
            "oracle_bracket",
            "witnesses",
            "timing_ms",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["instance"]["digest"].as_str().unwrap().len(), 64);
    }
}
