//! Scenario files and built-in scenarios.
//!
//! A scenario file is a sectioned key-value text file. `#` starts a comment,
//! tokens are separated by whitespace and sections may come in any order:
//!
//! ```text
//! [model]
//! users = alice bob
//! resources = high low
//! beta = 0.9
//! behavior = once            # unique | once | all
//! reward_variant = eps_zero  # eps_zero | eps_accrues
//!
//! [emergency]
//! calm_to_alert = 0.1
//! alert_to_alert = 1.0
//!
//! [reward_access]
//! alice high = 10
//! alice low = 6
//! bob high = -10
//! bob low = 4
//!
//! [reward_resource]
//! high = -20
//! low = 0
//! ```
//!
//! `calm_to_calm` and `alert_to_calm` default to the row complements; when
//! given explicitly each row must sum to one. Numbers are an optional sign,
//! digits, and an optional fraction. Exponents are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::dynamics::{EmergencyMatrix, RequestBehavior, STOCHASTIC_TOL};
use crate::error::{Error, ScenarioErrors, ScenarioIssue};
use crate::rewards::{RewardTables, RewardVariant};
use crate::scenario::Scenario;
use crate::state_space::{access_bit_index, Access, ModelDims};

pub const BUILTIN_NAMES: [&str; 7] =
    ["table1", "table2_unique", "table2_once", "table2_all", "modified_unique", "modified_once", "modified_all"];

/// Text of a scenario together with where it came from.
#[derive(Debug, Clone)]
pub struct ScenarioSource {
    pub text: String,
    pub provenance: String,
}

impl ScenarioSource {
    pub fn from_path(path: &std::path::Path) -> Result<Self, Error> {
        Ok(Self { text: std::fs::read_to_string(path)?, provenance: path.display().to_string() })
    }

    pub fn builtin(name: &str) -> Result<Self, Error> {
        let sc = builtin_scenario(name)?;
        Ok(Self { text: render_scenario(&sc), provenance: format!("builtin:{name}") })
    }

    pub fn parse(&self) -> Result<Scenario, ScenarioErrors> {
        parse_scenario(&self.text)
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario, Error> {
    let (emergency, behavior, variant, beta) = match name {
        "table1" => (EmergencyMatrix::identity(), RequestBehavior::Unique, RewardVariant::EpsZero, 0.0),
        _ => {
            let (prefix, behavior) = name.rsplit_once('_').ok_or_else(|| Error::UnknownBuiltin(name.to_string()))?;
            let variant = match prefix {
                "table2" => RewardVariant::EpsZero,
                "modified" => RewardVariant::EpsAccrues,
                _ => return Err(Error::UnknownBuiltin(name.to_string())),
            };
            let behavior = behavior.parse::<RequestBehavior>().map_err(|_| Error::UnknownBuiltin(name.to_string()))?;
            (EmergencyMatrix::with_alert_probability(0.1)?, behavior, variant, 0.9)
        }
    };
    let dims = ModelDims::new(2, 2)?;
    // Bit order: (alice,high), (alice,low), (bob,high), (bob,low).
    let rewards = RewardTables::new(&dims, vec![10.0, 6.0, -10.0, 4.0], vec![-20.0, 0.0]);
    Ok(Scenario {
        dims,
        user_names: vec!["alice".into(), "bob".into()],
        resource_names: vec!["high".into(), "low".into()],
        rewards,
        emergency,
        behavior,
        variant,
        beta,
    })
}

/// Canonical rendering; [`parse_scenario`] inverts it exactly.
pub fn render_scenario(sc: &Scenario) -> String {
    let mut out = String::new();
    let rows = sc.emergency.rows();
    let _ = writeln!(out, "[model]");
    let _ = writeln!(out, "users = {}", sc.user_names.join(" "));
    let _ = writeln!(out, "resources = {}", sc.resource_names.join(" "));
    let _ = writeln!(out, "beta = {}", fmt_number(sc.beta));
    let _ = writeln!(out, "behavior = {}", sc.behavior);
    let _ = writeln!(out, "reward_variant = {}", sc.variant);
    let _ = writeln!(out);
    let _ = writeln!(out, "[emergency]");
    let _ = writeln!(out, "calm_to_alert = {}", fmt_number(rows[0][1]));
    if rows[0][0] != 1.0 - rows[0][1] {
        let _ = writeln!(out, "calm_to_calm = {}", fmt_number(rows[0][0]));
    }
    let _ = writeln!(out, "alert_to_alert = {}", fmt_number(rows[1][1]));
    if rows[1][0] != 1.0 - rows[1][1] {
        let _ = writeln!(out, "alert_to_calm = {}", fmt_number(rows[1][0]));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[reward_access]");
    for a in sc.dims.accesses() {
        let _ = writeln!(
            out,
            "{} {} = {}",
            sc.user_names[a.user],
            sc.resource_names[a.resource],
            fmt_number(sc.rewards.access(a, &sc.dims))
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[reward_resource]");
    for (r, name) in sc.resource_names.iter().enumerate() {
        let _ = writeln!(out, "{name} = {}", fmt_number(sc.rewards.resource(r)));
    }
    out
}

/// Shortest round-trip decimal without exponent.
fn fmt_number(x: f64) -> String {
    format!("{x}")
}

fn parse_number(tok: &str) -> Option<f64> {
    let body = tok.strip_prefix(['-', '+']).unwrap_or(tok);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    tok.parse().ok()
}

#[derive(Debug)]
struct Entry {
    line: usize,
    keys: Vec<String>,
    values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    Model,
    Emergency,
    RewardAccess,
    RewardResource,
}

impl Section {
    fn from_header(name: &str) -> Option<Self> {
        match name {
            "model" => Some(Section::Model),
            "emergency" => Some(Section::Emergency),
            "reward_access" => Some(Section::RewardAccess),
            "reward_resource" => Some(Section::RewardResource),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Model => "model",
            Section::Emergency => "emergency",
            Section::RewardAccess => "reward_access",
            Section::RewardResource => "reward_resource",
        }
    }
}

struct Parser {
    issues: Vec<ScenarioIssue>,
}

impl Parser {
    fn issue(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ScenarioIssue { line, message: message.into() });
    }

    /// Single-value key lookup within a section: reports duplicates and
    /// multi-token values.
    fn single<'a>(
        &mut self,
        entries: &'a [Entry],
        key: &str,
        section: Section,
        required: bool,
    ) -> Option<(&'a Entry, &'a str)> {
        let mut found = entries.iter().filter(|e| e.keys.len() == 1 && e.keys[0] == key);
        let first = found.next();
        for dup in found {
            self.issue(dup.line, format!("duplicate key `{key}` in [{}]", section.name()));
        }
        match first {
            None => {
                if required {
                    self.issue(0, format!("missing key `{key}` in [{}]", section.name()));
                }
                None
            }
            Some(e) if e.values.len() != 1 => {
                self.issue(e.line, format!("`{key}` expects a single value"));
                None
            }
            Some(e) => Some((e, e.values[0].as_str())),
        }
    }

    fn number(&mut self, entry: &Entry, tok: &str) -> Option<f64> {
        let v = parse_number(tok);
        if v.is_none() {
            self.issue(entry.line, format!("malformed number `{tok}`"));
        }
        v
    }

    fn probability(&mut self, entries: &[Entry], key: &str, required: bool) -> Option<(usize, f64)> {
        let (e, tok) = self.single(entries, key, Section::Emergency, required)?;
        let p = self.number(e, tok)?;
        if !(0.0..=1.0).contains(&p) {
            self.issue(e.line, format!("`{key}` = {tok} is out of range [0, 1]"));
            return None;
        }
        Some((e.line, p))
    }

    fn labels(&mut self, entries: &[Entry], key: &str) -> Option<Vec<String>> {
        let mut found = entries.iter().filter(|e| e.keys.len() == 1 && e.keys[0] == key);
        let Some(e) = found.next() else {
            self.issue(0, format!("missing key `{key}` in [model]"));
            return None;
        };
        for dup in found {
            self.issue(dup.line, format!("duplicate key `{key}` in [model]"));
        }
        if e.values.is_empty() {
            self.issue(e.line, format!("`{key}` needs at least one label"));
            return None;
        }
        let mut ok = true;
        for (i, label) in e.values.iter().enumerate() {
            if e.values[..i].contains(label) {
                self.issue(e.line, format!("duplicate label `{label}` in `{key}`"));
                ok = false;
            }
            if label == "eps" || label.contains(',') {
                self.issue(e.line, format!("label `{label}` is reserved or contains a comma"));
                ok = false;
            }
        }
        ok.then(|| e.values.clone())
    }
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let mut p = Parser { issues: Vec::new() };
    let mut sections: HashMap<Section, Vec<Entry>> = HashMap::new();
    let mut seen_headers: HashMap<Section, usize> = HashMap::new();
    let mut current: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                p.issue(line, format!("malformed section header `{content}`"));
                current = None;
                continue;
            };
            match Section::from_header(name.trim()) {
                Some(sec) => {
                    if let Some(prev) = seen_headers.insert(sec, line) {
                        p.issue(line, format!("section [{}] repeated (first at line {prev})", sec.name()));
                    }
                    current = Some(sec);
                }
                None => {
                    p.issue(line, format!("unknown section `[{}]`", name.trim()));
                    current = None;
                }
            }
            continue;
        }
        let Some((lhs, rhs)) = content.split_once('=') else {
            p.issue(line, format!("expected `key = value`, got `{content}`"));
            continue;
        };
        let Some(sec) = current else {
            p.issue(line, "entry outside of a known section");
            continue;
        };
        let keys: Vec<String> = lhs.split_whitespace().map(String::from).collect();
        let values: Vec<String> = rhs.split_whitespace().map(String::from).collect();
        if keys.is_empty() {
            p.issue(line, "missing key before `=`");
            continue;
        }
        sections.entry(sec).or_default().push(Entry { line, keys, values });
    }

    for sec in [Section::Model, Section::Emergency, Section::RewardAccess, Section::RewardResource] {
        if !seen_headers.contains_key(&sec) {
            p.issue(0, format!("missing section [{}]", sec.name()));
        }
    }
    let empty = Vec::new();
    let model = sections.get(&Section::Model).unwrap_or(&empty);
    let emergency = sections.get(&Section::Emergency).unwrap_or(&empty);
    let access_entries = sections.get(&Section::RewardAccess).unwrap_or(&empty);
    let resource_entries = sections.get(&Section::RewardResource).unwrap_or(&empty);

    // [model]
    for e in model {
        if !(e.keys.len() == 1
            && ["users", "resources", "beta", "behavior", "reward_variant"].contains(&e.keys[0].as_str()))
        {
            p.issue(e.line, format!("unknown key `{}` in [model]", e.keys.join(" ")));
        }
    }
    let users = p.labels(model, "users");
    let resources = p.labels(model, "resources");
    let beta = p.single(model, "beta", Section::Model, true).and_then(|(e, tok)| {
        let b = p.number(e, tok)?;
        if !(0.0..1.0).contains(&b) {
            p.issue(e.line, format!("beta = {tok} is out of range [0, 1)"));
            return None;
        }
        Some(b)
    });
    let behavior = p
        .single(model, "behavior", Section::Model, true)
        .and_then(|(e, tok)| tok.parse::<RequestBehavior>().map_err(|m| p.issue(e.line, m)).ok());
    let variant = p
        .single(model, "reward_variant", Section::Model, true)
        .and_then(|(e, tok)| tok.parse::<RewardVariant>().map_err(|m| p.issue(e.line, m)).ok());

    // [emergency]
    for e in emergency {
        if !(e.keys.len() == 1
            && ["calm_to_alert", "alert_to_alert", "calm_to_calm", "alert_to_calm"].contains(&e.keys[0].as_str()))
        {
            p.issue(e.line, format!("unknown key `{}` in [emergency]", e.keys.join(" ")));
        }
    }
    let calm_alert = p.probability(emergency, "calm_to_alert", true);
    let alert_alert = p.probability(emergency, "alert_to_alert", true);
    let calm_calm = p.probability(emergency, "calm_to_calm", false);
    let alert_calm = p.probability(emergency, "alert_to_calm", false);
    let mut row = |to_alert: Option<(usize, f64)>, to_calm: Option<(usize, f64)>, name: &str| {
        let (line, pa) = to_alert?;
        match to_calm {
            None => Some([1.0 - pa, pa]),
            Some((cline, pc)) => {
                if (pa + pc - 1.0).abs() > STOCHASTIC_TOL {
                    p.issue(cline.max(line), format!("{name} row sums to {} instead of 1", pa + pc));
                    None
                } else {
                    Some([pc, pa])
                }
            }
        }
    };
    let calm_row = row(calm_alert, calm_calm, "calm");
    let alert_row = row(alert_alert, alert_calm, "alert");

    let dims = match (&users, &resources) {
        (Some(u), Some(r)) => match ModelDims::new(u.len(), r.len()) {
            Ok(d) => Some(d),
            Err(err) => {
                p.issue(0, err.to_string());
                None
            }
        },
        _ => None,
    };

    // [reward_access]
    let mut access_rewards: Option<Vec<Option<f64>>> = dims.map(|d| vec![None; d.num_accesses()]);
    for e in access_entries {
        let [user, resource] = e.keys.as_slice() else {
            p.issue(e.line, format!("reward_access key must be `<user> <resource>`, got `{}`", e.keys.join(" ")));
            continue;
        };
        if e.values.len() != 1 {
            p.issue(e.line, "reward_access entry expects a single value");
            continue;
        }
        let value = p.number(e, &e.values[0]);
        let (Some(us), Some(rs), Some(d)) = (&users, &resources, dims) else {
            continue;
        };
        let u = us.iter().position(|x| x == user);
        let r = rs.iter().position(|x| x == resource);
        if u.is_none() {
            p.issue(e.line, format!("reward_access for undeclared user `{user}`"));
        }
        if r.is_none() {
            p.issue(e.line, format!("reward_access for undeclared resource `{resource}`"));
        }
        let (Some(u), Some(r), Some(table)) = (u, r, access_rewards.as_mut()) else {
            continue;
        };
        let bit = access_bit_index(Access { user: u, resource: r }, &d);
        if table[bit].is_some() {
            p.issue(e.line, format!("duplicate reward_access entry `{user} {resource}`"));
        } else if let Some(v) = value {
            table[bit] = Some(v);
        } else {
            // Malformed value already reported; mark as present to avoid a totality error.
            table[bit] = Some(f64::NAN);
        }
    }
    if let (Some(table), Some(d), Some(us), Some(rs)) = (&access_rewards, dims, &users, &resources) {
        for a in d.accesses() {
            if table[access_bit_index(a, &d)].is_none() {
                p.issue(0, format!("missing reward_access entry `{} {}`", us[a.user], rs[a.resource]));
            }
        }
    }

    // [reward_resource]
    let mut resource_rewards: Option<Vec<Option<f64>>> = resources.as_ref().map(|r| vec![None; r.len()]);
    for e in resource_entries {
        let [resource] = e.keys.as_slice() else {
            p.issue(e.line, format!("reward_resource key must be `<resource>`, got `{}`", e.keys.join(" ")));
            continue;
        };
        if e.values.len() != 1 {
            p.issue(e.line, "reward_resource entry expects a single value");
            continue;
        }
        let value = p.number(e, &e.values[0]);
        let (Some(rs), Some(table)) = (&resources, resource_rewards.as_mut()) else {
            continue;
        };
        let Some(r) = rs.iter().position(|x| x == resource) else {
            p.issue(e.line, format!("reward_resource for undeclared resource `{resource}`"));
            continue;
        };
        if table[r].is_some() {
            p.issue(e.line, format!("duplicate reward_resource entry `{resource}`"));
        } else {
            table[r] = Some(value.unwrap_or(f64::NAN));
        }
    }
    if let (Some(table), Some(rs)) = (&resource_rewards, &resources) {
        for (r, v) in table.iter().enumerate() {
            if v.is_none() {
                p.issue(0, format!("missing reward_resource entry `{}`", rs[r]));
            }
        }
    }

    if !p.issues.is_empty() {
        p.issues.sort_by_key(|i| i.line);
        return Err(ScenarioErrors(p.issues));
    }

    // No issues means every piece above is present.
    let dims = dims.expect("dims");
    let rewards = RewardTables::new(
        &dims,
        access_rewards.expect("access").into_iter().map(|v| v.expect("total")).collect(),
        resource_rewards.expect("resource").into_iter().map(|v| v.expect("total")).collect(),
    );
    let emergency = EmergencyMatrix::new([calm_row.expect("calm"), alert_row.expect("alert")])
        .map_err(|e| ScenarioErrors(vec![ScenarioIssue { line: 0, message: e.to_string() }]))?;
    Ok(Scenario {
        dims,
        user_names: users.expect("users"),
        resource_names: resources.expect("resources"),
        rewards,
        emergency,
        behavior: behavior.expect("behavior"),
        variant: variant.expect("variant"),
        beta: beta.expect("beta"),
    })
}
