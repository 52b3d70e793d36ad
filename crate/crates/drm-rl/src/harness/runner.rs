//! Multi-seed execution, regret accounting, and CSV emission.

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::agents::{run_algorithm, AgentConfig};
use rayon::prelude::*;
use std::fmt;
use std::io::Write;

/// One (algorithm, seed) cell's regret trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub algo: String,
    pub seed: u64,
    pub inst: Vec<f64>,
    pub cum: Vec<f64>,
    pub config_hash: u64,
}

impl RegretCurve {
    pub fn final_cum(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }
}

/// Final cumulative regret statistics for one algorithm label across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSummary {
    pub algo: String,
    pub num_seeds: usize,
    pub mean_final: f64,
    pub std_final: f64,
}

impl fmt::Display for AlgoSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: final cumulative regret {:.3} +/- {:.3} over {} seed{}",
            self.algo,
            self.mean_final,
            self.std_final,
            self.num_seeds,
            if self.num_seeds == 1 { "" } else { "s" }
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// In config order: all seeds of the first algorithm, then the second...
    pub curves: Vec<RegretCurve>,
    pub summaries: Vec<AlgoSummary>,
}

/// Runs every (algorithm, seed) cell of the experiment in parallel.
///
/// Cells share only the read-only instance; each owns its learner state and
/// generator streams, so the outcome is deterministic regardless of thread
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let mdp = cfg.instance.build()?;
    let cells: Vec<(usize, u64)> = cfg
        .algos
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let curves = cells
        .par_iter()
        .map(|&(i, seed)| {
            let spec = &cfg.algos[i];
            let mut agent_cfg =
                AgentConfig::new(spec.algorithm, spec.risks.clone(), cfg.delta, cfg.episodes);
            agent_cfg.clip_values = cfg.clip_values;
            agent_cfg.bonus_scale = spec.bonus_scale;
            agent_cfg.objective = cfg.objective.clone();
            let artifacts = run_algorithm(&mdp, &agent_cfg, seed)?;
            Ok(RegretCurve {
                algo: spec.label.clone(),
                seed,
                inst: artifacts.inst_regret,
                cum: artifacts.cum_regret,
                config_hash: cfg.config_hash,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let summaries = cfg
        .algos
        .iter()
        .map(|spec| {
            let finals: Vec<f64> = curves
                .iter()
                .filter(|c| c.algo == spec.label)
                .map(RegretCurve::final_cum)
                .collect();
            let n = finals.len() as f64;
            let mean = finals.iter().sum::<f64>() / n;
            let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            AlgoSummary {
                algo: spec.label.clone(),
                num_seeds: finals.len(),
                mean_final: mean,
                std_final: var.sqrt(),
            }
        })
        .collect();

    Ok(ExperimentOutcome { curves, summaries })
}

/// Writes all curves as CSV: `algo,seed,episode,inst_regret,cum_regret`,
/// episodes numbered from 1, floats at 17 significant digits so parsing the
/// file back loses nothing.
pub fn write_csv<W: Write>(out: &mut W, curves: &[RegretCurve]) -> Result<(), HarnessError> {
    writeln!(out, "algo,seed,episode,inst_regret,cum_regret")?;
    for curve in curves {
        for (k, (inst, cum)) in curve.inst.iter().zip(&curve.cum).enumerate() {
            writeln!(
                out,
                "{},{},{},{:.16e},{:.16e}",
                curve.algo,
                curve.seed,
                k + 1,
                inst,
                cum
            )?;
        }
    }
    Ok(())
}

pub fn csv_string(curves: &[RegretCurve]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, curves).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is ascii")
}

/// Ratio of the least-squares slope of cumulative regret over the final
/// `tail_fraction` of episodes to the slope over the first `tail_fraction`.
///
/// A flat tail gives 0 regardless of the head; a flat head with a rising
/// tail gives infinity.  A linear curve gives 1; ratios below 0.5 are the
/// working definition of sublinear growth.
pub fn slope_test(curve: &RegretCurve, tail_fraction: f64) -> Result<f64, HarnessError> {
    slope_ratio(&curve.cum, tail_fraction)
}

/// [`slope_test`] on a bare cumulative-regret series.
pub fn slope_ratio(cum: &[f64], tail_fraction: f64) -> Result<f64, HarnessError> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(HarnessError::config(format!(
            "tail fraction {tail_fraction} outside (0, 1)"
        )));
    }
    let n = cum.len();
    if n < 10 {
        return Err(HarnessError::CurveTooShort { len: n, min: 10 });
    }
    let m = ((n as f64 * tail_fraction).ceil() as usize).clamp(2, n);
    let head = ls_slope(&cum[..m]);
    let tail = ls_slope(&cum[n - m..]);
    if tail.abs() < 1e-15 {
        Ok(0.0)
    } else if head.abs() < 1e-15 {
        Ok(f64::INFINITY)
    } else {
        Ok(tail / head)
    }
}

fn ls_slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let x_bar = (y.len() - 1) as f64 / 2.0;
    let y_bar = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let dx = i as f64 - x_bar;
        num += dx * (yi - y_bar);
        den += dx * dx;
    }
    num / den
}

/// 64-bit FNV-1a over raw bytes; used to stamp curves with the config they
/// came from.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}
