//! Experiment configuration: an INI-style format with three section kinds.
//!
//! ```text
//! # comparison on the four-state benchmark
//! [instance]
//! kind = experiment
//! actions = 5
//! horizon = 5
//!
//! [run]
//! episodes = 10000
//! seeds = [0, 1, 2, 3, 4]
//! delta = 0.005
//! clip = true
//! out = regret.csv
//!
//! [algo cvar-ovi]
//! algorithm = ovi
//! risk = cvar, alpha = 0.05
//!
//! [algo cvar-ucbvi]
//! algorithm = ucbvi
//! risk = cvar, alpha = [0.09, 0.08, 0.07, 0.05]
//! bonus_scale = 0.1
//! ```
//!
//! Scalars in per-stage positions broadcast to all `H - 1` internal stages;
//! bracketed lists must have exactly `H - 1` entries.  Lines starting with
//! `#` are comments.  Unknown keys and duplicate keys are errors, so typos
//! fail fast instead of silently running defaults.

use super::runner::fnv1a64;
use super::HarnessError;
use crate::agents::Algorithm;
use crate::mdp::{
    gen_experiment_mdp, gen_gap_hard_instance, gen_tree_hard_instance, PlantedLeaf, TabularMdp,
};
use crate::risk::{RiskMeasure, RiskSchedule};
use ndarray::Array2;
use std::path::PathBuf;

/// A benchmark instance: either a named generator with its parameters or a
/// snapshot file on disk.
#[derive(Debug, Clone)]
pub enum InstanceSpec {
    Experiment {
        actions: usize,
        horizon: usize,
    },
    Tree {
        actions: usize,
        depth: usize,
        horizon: usize,
        p_good: f64,
        eps: f64,
        planted: Option<PlantedLeaf>,
    },
    Gap {
        core_states: usize,
        actions: usize,
        horizon: usize,
        gaps: Array2<f64>,
    },
    File {
        path: PathBuf,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<TabularMdp, HarnessError> {
        match self {
            InstanceSpec::Experiment { actions, horizon } => {
                Ok(gen_experiment_mdp(*actions, *horizon)?)
            }
            InstanceSpec::Tree {
                actions,
                depth,
                horizon,
                p_good,
                eps,
                planted,
            } => Ok(gen_tree_hard_instance(
                *actions, *depth, *horizon, *p_good, *eps, *planted,
            )?),
            InstanceSpec::Gap {
                core_states,
                actions,
                horizon,
                gaps,
            } => Ok(gen_gap_hard_instance(
                *core_states,
                *actions,
                *horizon,
                gaps,
            )?),
            InstanceSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                Ok(TabularMdp::from_text(&text)?)
            }
        }
    }

    /// Horizon without building the instance, except for `File`, which is
    /// parsed to find out.  Needed at config-parse time to size schedules.
    pub fn horizon(&self) -> Result<usize, HarnessError> {
        match self {
            InstanceSpec::Experiment { horizon, .. }
            | InstanceSpec::Tree { horizon, .. }
            | InstanceSpec::Gap { horizon, .. } => Ok(*horizon),
            InstanceSpec::File { .. } => Ok(self.build()?.horizon()),
        }
    }
}

/// One learner entry from an `[algo <label>]` section.
#[derive(Debug, Clone)]
pub struct AlgoSpec {
    pub label: String,
    pub algorithm: Algorithm,
    pub risks: RiskSchedule,
    pub bonus_scale: f64,
}

/// A fully resolved experiment: instance, run parameters, and learners.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub delta: f64,
    pub clip_values: bool,
    pub out: Option<PathBuf>,
    /// When set, regret for every learner is measured under this schedule
    /// instead of its own planning schedule.  This is how a risk-neutral
    /// baseline gets scored against the risk-sensitive objective.
    pub objective: Option<RiskSchedule>,
    pub algos: Vec<AlgoSpec>,
    /// FNV-1a hash of the raw config bytes, recorded on every curve.
    pub config_hash: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut sections = parse_sections(text)?;

        let mut instance_sec = take_unique(&mut sections, "instance")?
            .ok_or_else(|| HarnessError::config("missing [instance] section"))?;
        let instance = instance_from_section(&mut instance_sec)?;
        let horizon = instance.horizon()?;
        let stages = horizon.saturating_sub(1);

        let mut run_sec = take_unique(&mut sections, "run")?
            .ok_or_else(|| HarnessError::config("missing [run] section"))?;
        let episodes = run_sec.require("episodes")?.parse_usize()?;
        let seeds = run_sec.require("seeds")?.parse_u64_list()?;
        let delta = match run_sec.take("delta") {
            Some(e) => e.parse_f64()?,
            None => 0.05,
        };
        let clip_values = match run_sec.take("clip") {
            Some(e) => e.parse_bool()?,
            None => true,
        };
        let out = run_sec.take("out").map(|e| PathBuf::from(&e.value));
        let objective = match run_sec.take("objective") {
            Some(e) => {
                let line = e.line;
                let value = e.value.clone();
                Some(parse_risk_spec(&value, stages).map_err(|err| at_line(line, err))?)
            }
            None => None,
        };
        run_sec.finish()?;

        let mut algos = Vec::new();
        for mut sec in sections.drain(..) {
            if sec.kind != "algo" {
                return Err(HarnessError::config(format!(
                    "line {}: unknown section [{}]",
                    sec.line, sec.kind
                )));
            }
            let label = sec.label.clone().ok_or_else(|| {
                HarnessError::config(format!("line {}: [algo] needs a label", sec.line))
            })?;
            check_label(&label, sec.line)?;
            let algorithm = sec.require("algorithm")?.parse_algorithm()?;
            let risk_entry = sec.require("risk")?;
            let risks = parse_risk_spec(&risk_entry.value, stages)
                .map_err(|e| at_line(risk_entry.line, e))?;
            let bonus_scale = match sec.take("bonus_scale") {
                Some(e) => e.parse_f64()?,
                None => 1.0,
            };
            sec.finish()?;
            algos.push(AlgoSpec {
                label,
                algorithm,
                risks,
                bonus_scale,
            });
        }

        let cfg = ExperimentConfig {
            instance,
            episodes,
            seeds,
            delta,
            clip_values,
            out,
            objective,
            algos,
            config_hash: fnv1a64(text.as_bytes()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the cross-field invariants; `parse` calls this, programmatic
    /// construction should too.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::config("episodes must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seeds must be nonempty"));
        }
        let mut sorted_seeds = self.seeds.clone();
        sorted_seeds.sort_unstable();
        if sorted_seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::config("duplicate seeds"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::config(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        if self.algos.is_empty() {
            return Err(HarnessError::config("need at least one [algo] section"));
        }
        let stages = self.instance.horizon()?.saturating_sub(1);
        if let Some(objective) = &self.objective {
            if objective.len() != stages {
                return Err(HarnessError::config(format!(
                    "objective schedule has {} stages, horizon {} needs {}",
                    objective.len(),
                    stages + 1,
                    stages
                )));
            }
            objective.validate()?;
        }
        for spec in &self.algos {
            if spec.risks.len() != stages {
                return Err(HarnessError::config(format!(
                    "algo {}: risk schedule has {} stages, horizon {} needs {}",
                    spec.label,
                    spec.risks.len(),
                    stages + 1,
                    stages
                )));
            }
            spec.risks.validate()?;
            if !(spec.bonus_scale.is_finite() && spec.bonus_scale > 0.0) {
                return Err(HarnessError::config(format!(
                    "algo {}: bonus_scale {} must be positive",
                    spec.label, spec.bonus_scale
                )));
            }
        }
        let mut labels: Vec<&str> = self.algos.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::config("duplicate [algo] labels"));
        }
        Ok(())
    }
}

/// Parses a risk schedule expression such as `mean`,
/// `cvar, alpha = [0.09, 0.08, 0.07, 0.05]`, or `erm, beta = -1.5`.
/// Scalar parameters broadcast to all `stages` entries.
pub fn parse_risk_spec(value: &str, stages: usize) -> Result<RiskSchedule, HarnessError> {
    let parts = split_top_level(value, ',');
    let kind = parts[0].trim().to_ascii_lowercase();
    let mut params: Vec<(String, String)> = Vec::new();
    for part in &parts[1..] {
        let (k, v) = part.split_once('=').ok_or_else(|| {
            HarnessError::config(format!(
                "risk parameter `{}` is not key = value",
                part.trim()
            ))
        })?;
        params.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    let mut take_param = |name: &str| -> Option<String> {
        let pos = params.iter().position(|(k, _)| k == name)?;
        Some(params.remove(pos).1)
    };

    let schedule = match kind.as_str() {
        "mean" => RiskSchedule::uniform(RiskMeasure::Mean, stages),
        "cvar" => {
            let raw = take_param("alpha")
                .ok_or_else(|| HarnessError::config("cvar needs an alpha parameter"))?;
            let alphas = broadcast_f64(&raw, stages, "alpha")?;
            let measures = alphas
                .into_iter()
                .map(RiskMeasure::cvar)
                .collect::<Result<Vec<_>, _>>()?;
            RiskSchedule::new(measures)
        }
        "erm" => {
            let raw = take_param("beta")
                .ok_or_else(|| HarnessError::config("erm needs a beta parameter"))?;
            let betas = broadcast_f64(&raw, stages, "beta")?;
            let measures = betas
                .into_iter()
                .map(RiskMeasure::erm)
                .collect::<Result<Vec<_>, _>>()?;
            RiskSchedule::new(measures)
        }
        other => {
            return Err(HarnessError::config(format!(
                "unknown risk measure `{other}` (expected mean, cvar, or erm)"
            )))
        }
    };
    if let Some((k, _)) = params.first() {
        return Err(HarnessError::config(format!(
            "unknown risk parameter `{k}` for `{kind}`"
        )));
    }
    Ok(schedule)
}

/// Parses a command-line generator spec such as
/// `experiment:actions=5,horizon=5` or
/// `gap:core_states=2,actions=3,horizon=5,gaps=[0,0.5,1]`.
pub fn parse_inline_instance(spec: &str) -> Result<InstanceSpec, HarnessError> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k.trim(), r),
        None => (spec.trim(), ""),
    };
    let mut sec = Section {
        kind: "instance".to_string(),
        label: None,
        line: 0,
        entries: Vec::new(),
    };
    sec.entries.push(Entry {
        key: "kind".to_string(),
        value: kind.to_string(),
        line: 0,
        used: false,
    });
    for part in split_top_level(rest, ',') {
        if part.trim().is_empty() {
            continue;
        }
        let (k, v) = part.split_once('=').ok_or_else(|| {
            HarnessError::config(format!(
                "generator parameter `{}` is not key=value",
                part.trim()
            ))
        })?;
        sec.entries.push(Entry {
            key: k.trim().to_ascii_lowercase(),
            value: v.trim().to_string(),
            line: 0,
            used: false,
        });
    }
    instance_from_section(&mut sec)
}

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: bool,
}

impl Entry {
    fn parse_usize(&self) -> Result<usize, HarnessError> {
        self.value
            .parse::<usize>()
            .map_err(|_| self.bad("a nonnegative integer"))
    }

    fn parse_u64(&self) -> Result<u64, HarnessError> {
        self.value
            .parse::<u64>()
            .map_err(|_| self.bad("a nonnegative integer"))
    }

    fn parse_f64(&self) -> Result<f64, HarnessError> {
        self.value.parse::<f64>().map_err(|_| self.bad("a number"))
    }

    fn parse_bool(&self) -> Result<bool, HarnessError> {
        match self.value.to_ascii_lowercase().as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.bad("true or false")),
        }
    }

    fn parse_algorithm(&self) -> Result<Algorithm, HarnessError> {
        match self.value.to_ascii_lowercase().as_str() {
            "ucbvi" | "ucbvi-drm" => Ok(Algorithm::UcbviDrm),
            "ovi" | "ovi-drm" => Ok(Algorithm::OviDrm),
            _ => Err(self.bad("ucbvi or ovi")),
        }
    }

    /// A bracketed list `[a, b, c]` or a bare scalar (singleton list).
    fn parse_u64_list(&self) -> Result<Vec<u64>, HarnessError> {
        let raw = self.value.trim();
        if let Some(inner) = strip_brackets(raw) {
            inner
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| self.bad("a list of nonnegative integers"))
                })
                .collect()
        } else {
            Ok(vec![self.parse_u64()?])
        }
    }

    fn bad(&self, expected: &str) -> HarnessError {
        HarnessError::config(format!(
            "line {}: `{}` = `{}` is not {expected}",
            self.line, self.key, self.value
        ))
    }
}

#[derive(Debug)]
struct Section {
    kind: String,
    label: Option<String>,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<&Entry> {
        let pos = self.entries.iter().position(|e| e.key == key)?;
        self.entries[pos].used = true;
        Some(&self.entries[pos])
    }

    fn require(&mut self, key: &str) -> Result<&Entry, HarnessError> {
        let line = self.line;
        let name = self.name();
        self.take(key).ok_or_else(|| {
            HarnessError::config(format!("line {line}: [{name}] is missing `{key}`"))
        })
    }

    fn finish(&self) -> Result<(), HarnessError> {
        if let Some(e) = self.entries.iter().find(|e| !e.used) {
            return Err(HarnessError::config(format!(
                "line {}: unknown key `{}` in [{}]",
                e.line,
                e.key,
                self.name()
            )));
        }
        Ok(())
    }

    fn name(&self) -> String {
        match &self.label {
            Some(l) => format!("{} {l}", self.kind),
            None => self.kind.clone(),
        }
    }
}

fn parse_sections(text: &str) -> Result<Vec<Section>, HarnessError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| {
                    HarnessError::config(format!("line {line}: unclosed section header"))
                })?
                .trim();
            let mut words = inner.split_whitespace();
            let kind = words
                .next()
                .ok_or_else(|| HarnessError::config(format!("line {line}: empty section header")))?
                .to_ascii_lowercase();
            let label = words.next().map(|w| w.to_string());
            if words.next().is_some() {
                return Err(HarnessError::config(format!(
                    "line {line}: section header has more than two words"
                )));
            }
            sections.push(Section {
                kind,
                label,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            HarnessError::config(format!(
                "line {line}: expected `key = value` or a section header"
            ))
        })?;
        let section = sections.last_mut().ok_or_else(|| {
            HarnessError::config(format!("line {line}: key before any section header"))
        })?;
        let key = key.trim().to_ascii_lowercase();
        if section.entries.iter().any(|e| e.key == key) {
            return Err(HarnessError::config(format!(
                "line {line}: duplicate key `{key}` in [{}]",
                section.name()
            )));
        }
        section.entries.push(Entry {
            key,
            value: value.trim().to_string(),
            line,
            used: false,
        });
    }
    Ok(sections)
}

fn take_unique(sections: &mut Vec<Section>, kind: &str) -> Result<Option<Section>, HarnessError> {
    let mut found = None;
    let mut i = 0;
    while i < sections.len() {
        if sections[i].kind == kind {
            if found.is_some() {
                return Err(HarnessError::config(format!(
                    "line {}: second [{kind}] section",
                    sections[i].line
                )));
            }
            found = Some(sections.remove(i));
        } else {
            i += 1;
        }
    }
    Ok(found)
}

fn instance_from_section(sec: &mut Section) -> Result<InstanceSpec, HarnessError> {
    let kind = sec.require("kind")?.value.to_ascii_lowercase();
    let spec = match kind.as_str() {
        "experiment" => InstanceSpec::Experiment {
            actions: sec.require("actions")?.parse_usize()?,
            horizon: sec.require("horizon")?.parse_usize()?,
        },
        "tree" => {
            let actions = sec.require("actions")?.parse_usize()?;
            let depth = sec.require("depth")?.parse_usize()?;
            let horizon = sec.require("horizon")?.parse_usize()?;
            let p_good = sec.require("p_good")?.parse_f64()?;
            let eps = match sec.take("eps") {
                Some(e) => e.parse_f64()?,
                None => 0.0,
            };
            let planted = planted_from_section(sec)?;
            InstanceSpec::Tree {
                actions,
                depth,
                horizon,
                p_good,
                eps,
                planted,
            }
        }
        "gap" => {
            let core_states = sec.require("core_states")?.parse_usize()?;
            let actions = sec.require("actions")?.parse_usize()?;
            let horizon = sec.require("horizon")?.parse_usize()?;
            let entry = sec.require("gaps")?;
            let gaps = parse_gap_matrix(&entry.value, core_states, actions)
                .map_err(|e| at_line(entry.line, e))?;
            InstanceSpec::Gap {
                core_states,
                actions,
                horizon,
                gaps,
            }
        }
        "file" => InstanceSpec::File {
            path: PathBuf::from(&sec.require("path")?.value),
        },
        other => return Err(HarnessError::config(format!(
            "line {}: unknown instance kind `{other}` (expected experiment, tree, gap, or file)",
            sec.line
        ))),
    };
    sec.finish()?;
    Ok(spec)
}

fn planted_from_section(sec: &mut Section) -> Result<Option<PlantedLeaf>, HarnessError> {
    let stage = sec
        .take("planted_stage")
        .map(|e| e.parse_usize())
        .transpose()?;
    let leaf = sec
        .take("planted_leaf")
        .map(|e| e.parse_usize())
        .transpose()?;
    let action = sec
        .take("planted_action")
        .map(|e| e.parse_usize())
        .transpose()?;
    match (stage, leaf, action) {
        (None, None, None) => Ok(None),
        (Some(stage), Some(leaf), Some(action)) => Ok(Some(PlantedLeaf {
            stage,
            leaf,
            action,
        })),
        _ => Err(HarnessError::config(format!(
            "line {}: planted_stage, planted_leaf, and planted_action must appear together",
            sec.line
        ))),
    }
}

/// `[g00, g01; g10, g11]`: rows separated by `;`, one row broadcasts to all
/// core states.
fn parse_gap_matrix(
    raw: &str,
    core_states: usize,
    actions: usize,
) -> Result<Array2<f64>, HarnessError> {
    let inner = strip_brackets(raw.trim())
        .ok_or_else(|| HarnessError::config("gaps must be a bracketed matrix"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for row in inner.split(';') {
        let parsed = row
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                HarnessError::config(format!("gaps row `{}` is not numbers", row.trim()))
            })?;
        rows.push(parsed);
    }
    if rows.len() == 1 && core_states > 1 {
        let row = rows[0].clone();
        rows = vec![row; core_states];
    }
    if rows.len() != core_states || rows.iter().any(|r| r.len() != actions) {
        return Err(HarnessError::config(format!(
            "gaps must be {core_states} rows of {actions} entries (or one row to broadcast)"
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((core_states, actions), flat).expect("shape checked"))
}

fn broadcast_f64(raw: &str, stages: usize, name: &str) -> Result<Vec<f64>, HarnessError> {
    let raw = raw.trim();
    if let Some(inner) = strip_brackets(raw) {
        let values = inner
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| HarnessError::config(format!("{name} list `{raw}` is not numbers")))?;
        if values.len() != stages {
            return Err(HarnessError::config(format!(
                "{name} list has {} entries, need one per internal stage ({stages})",
                values.len()
            )));
        }
        Ok(values)
    } else {
        let value = raw
            .parse::<f64>()
            .map_err(|_| HarnessError::config(format!("{name} `{raw}` is not a number")))?;
        Ok(vec![value; stages])
    }
}

fn strip_brackets(raw: &str) -> Option<&str> {
    raw.strip_prefix('[')?.strip_suffix(']')
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn check_label(label: &str, line: usize) -> Result<(), HarnessError> {
    let ok = !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.');
    if ok {
        Ok(())
    } else {
        Err(HarnessError::config(format!(
            "line {line}: algo label `{label}` may only contain letters, digits, `-`, `_`, `.`"
        )))
    }
}

fn at_line(line: usize, err: HarnessError) -> HarnessError {
    match err {
        HarnessError::Config { reason } => HarnessError::config(format!("line {line}: {reason}")),
        other => other,
    }
}
