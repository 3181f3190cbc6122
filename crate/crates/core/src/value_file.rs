//! Solved value tables on disk.
//!
//! ```text
//! ACMDP-VALUES v1
//! <scenario fingerprint>
//! calm,0,alice,high,<value>,<action>,<dv deny>,<dv allow>
//! ...
//! ```
//!
//! One row per state in enumeration order; the empty request is written as
//! `eps,eps`. Reals carry 12 significant digits. User and resource labels
//! are recovered from the first block of rows (calm, empty set), which
//! lists every access in bit order.

use std::fmt::Write as _;

use crate::error::ValueFileError;
use crate::policy::{choose, Decision, Solution};
use crate::scenario::Scenario;
use crate::state_space::{AccessSet, Action, Emergency, ModelDims, Request, State, StateSpace};

pub const HEADER: &str = "ACMDP-VALUES v1";

/// Formats a real with 12 significant digits, `%g` style.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..12).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueRow {
    pub state: State,
    pub value: f64,
    pub action: Action,
    pub dv_deny: f64,
    pub dv_allow: f64,
}

/// Contents of a value file.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub fingerprint: String,
    pub dims: ModelDims,
    pub user_names: Vec<String>,
    pub resource_names: Vec<String>,
    pub rows: Vec<ValueRow>,
}

impl ValueTable {
    pub fn from_solution(sol: &Solution) -> Self {
        let sc = &sol.scenario;
        let rows = sc
            .state_space()
            .states()
            .enumerate()
            .map(|(i, state)| ValueRow {
                state,
                value: sol.values[i],
                action: sol.policy.action(i),
                dv_deny: sol.decisions.get(i, Action::Deny),
                dv_allow: sol.decisions.get(i, Action::Allow),
            })
            .collect();
        Self {
            fingerprint: sc.fingerprint(),
            dims: sc.dims,
            user_names: sc.user_names.clone(),
            resource_names: sc.resource_names.clone(),
            rows,
        }
    }

    pub fn user_index(&self, name: &str) -> Option<usize> {
        self.user_names.iter().position(|u| u == name)
    }

    pub fn resource_index(&self, name: &str) -> Option<usize> {
        self.resource_names.iter().position(|r| r == name)
    }

    pub fn row(&self, s: &State) -> Option<&ValueRow> {
        if !self.dims.contains_state(s) {
            return None;
        }
        self.rows.get(StateSpace::new(self.dims).state_index(s))
    }

    pub fn decide(&self, s: &State) -> Option<Decision> {
        self.row(s).map(|r| {
            let (_, gap) = choose(r.dv_deny, r.dv_allow);
            Decision { action: r.action, dv_deny: r.dv_deny, dv_allow: r.dv_allow, gap, value: r.value }
        })
    }

    /// Checks that this table was produced for `sc`.
    pub fn check_scenario(&self, sc: &Scenario) -> Result<(), ValueFileError> {
        if self.user_names != sc.user_names || self.resource_names != sc.resource_names {
            return Err(ValueFileError::Dimensions(format!(
                "file has users {:?} and resources {:?}, scenario has {:?} and {:?}",
                self.user_names, self.resource_names, sc.user_names, sc.resource_names
            )));
        }
        let expected = sc.fingerprint();
        if self.fingerprint != expected {
            return Err(ValueFileError::Fingerprint { expected, found: self.fingerprint.clone() });
        }
        Ok(())
    }

    fn request_labels(&self, r: Request) -> (&str, &str) {
        match r {
            Request::Access(a) => (&self.user_names[a.user], &self.resource_names[a.resource]),
            Request::Empty => ("eps", "eps"),
        }
    }
}

pub fn export_values(table: &ValueTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{}", table.fingerprint);
    for row in &table.rows {
        let (user, resource) = table.request_labels(row.state.request);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.state.emergency,
            row.state.granted,
            user,
            resource,
            format_real(row.value),
            row.action,
            format_real(row.dv_deny),
            format_real(row.dv_allow),
        );
    }
    out
}

struct RawRow<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

fn malformed(line: usize, message: impl Into<String>) -> ValueFileError {
    ValueFileError::Malformed { line, message: message.into() }
}

fn parse_real(line: usize, what: &str, tok: &str) -> Result<f64, ValueFileError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| malformed(line, format!("{what} `{tok}` is not a finite number")))
}

pub fn import_values(text: &str) -> Result<ValueTable, ValueFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != HEADER {
        return Err(ValueFileError::Version(header.to_string()));
    }
    let (_, fingerprint) = lines.next().ok_or_else(|| malformed(2, "missing scenario fingerprint"))?;
    let fingerprint = fingerprint.trim();
    if fingerprint.is_empty() || !fingerprint.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(malformed(2, format!("bad fingerprint `{fingerprint}`")));
    }

    let mut raw = Vec::new();
    for (line, content) in lines {
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(malformed(line, format!("expected 8 fields, found {}", fields.len())));
        }
        raw.push(RawRow { line, fields });
    }

    // Labels from the leading (calm, 0) block, terminated by the eps row.
    let eps_pos = raw
        .iter()
        .position(|r| r.fields[2] == "eps")
        .ok_or(ValueFileError::Incomplete { expected: 0, got: raw.len() })?;
    let mut user_names: Vec<String> = Vec::new();
    let mut resource_names: Vec<String> = Vec::new();
    for r in &raw[..eps_pos] {
        if !user_names.iter().any(|u| u == r.fields[2]) {
            user_names.push(r.fields[2].to_string());
        }
        if !resource_names.iter().any(|x| x == r.fields[3]) {
            resource_names.push(r.fields[3].to_string());
        }
    }
    if user_names.is_empty() || user_names.len() * resource_names.len() != eps_pos {
        return Err(ValueFileError::Dimensions(format!(
            "{eps_pos} leading accesses do not form a users × resources grid ({} users, {} resources)",
            user_names.len(),
            resource_names.len()
        )));
    }
    let dims = ModelDims::new(user_names.len(), resource_names.len())
        .map_err(|e| ValueFileError::Dimensions(e.to_string()))?;
    let space = StateSpace::new(dims);
    if raw.len() != space.len() {
        return Err(ValueFileError::Incomplete { expected: space.len(), got: raw.len() });
    }

    let mut table =
        ValueTable { fingerprint: fingerprint.to_string(), dims, user_names, resource_names, rows: Vec::new() };
    let mut rows = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let expected = space.index_state(i);
        let (eu, er) = table.request_labels(expected.request);
        let f = &r.fields;
        let emergency =
            Emergency::from_label(f[0]).ok_or_else(|| malformed(r.line, format!("unknown status `{}`", f[0])))?;
        let granted: u64 = f[1].parse().map_err(|_| malformed(r.line, format!("bad set index `{}`", f[1])))?;
        if emergency != expected.emergency || AccessSet(granted) != expected.granted || f[2] != eu || f[3] != er {
            return Err(malformed(
                r.line,
                format!("row out of order: expected {},{},{},{}", expected.emergency, expected.granted, eu, er),
            ));
        }
        let action = Action::from_label(f[5]).ok_or_else(|| malformed(r.line, format!("unknown action `{}`", f[5])))?;
        rows.push(ValueRow {
            state: expected,
            value: parse_real(r.line, "value", f[4])?,
            action,
            dv_deny: parse_real(r.line, "deny value", f[6])?,
            dv_allow: parse_real(r.line, "allow value", f[7])?,
        });
    }
    table.rows = rows;
    Ok(table)
}
